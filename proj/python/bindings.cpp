#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "eigendesign/asymptotics.hpp"
#include "eigendesign/cli.hpp"
#include "eigendesign/error.hpp"

namespace py = pybind11;
using namespace eigendesign;

namespace {

Eigen::MatrixXd vertex_array(const Mesh& m) {
    Eigen::MatrixXd v(m.vertex_count(), m.dim);
    for (int i = 0; i < m.vertex_count(); ++i)
        for (int k = 0; k < m.dim; ++k) v(i, k) = m.vertices[i][k];
    return v;
}

Eigen::MatrixXi element_array(const Mesh& m) {
    Eigen::MatrixXi e(m.element_count(), m.nodes_per_element());
    for (int i = 0; i < m.element_count(); ++i)
        for (int k = 0; k < m.nodes_per_element(); ++k) e(i, k) = m.elements[i][k];
    return e;
}

}  // namespace

PYBIND11_MODULE(_eigendesign, m) {
    m.doc() = "Optimal favorable sets for the weighted Neumann eigenvalue problem";

    auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<InvalidArgument>(m, "InvalidArgument", base.ptr());
    py::register_exception<SolverError>(m, "SolverError", base.ptr());

    m.def("unit_ball_volume", &unit_ball_volume, py::arg("n"));

    py::class_<LimitConfig>(m, "LimitConfig")
        .def(py::init([](int dim, double beta, double mass) { return LimitConfig{dim, beta, mass}; }),
             py::arg("dim") = 1, py::arg("beta") = 1.0, py::arg("mass") = 1.0)
        .def_readwrite("dim", &LimitConfig::dim)
        .def_readwrite("beta", &LimitConfig::beta)
        .def_readwrite("mass", &LimitConfig::mass);

    py::class_<RadialSolution>(m, "RadialSolution")
        .def_readonly("config", &RadialSolution::config)
        .def_readonly("mu", &RadialSolution::mu)
        .def_readonly("rbar", &RadialSolution::rbar)
        .def("decay_rate", &RadialSolution::decay_rate)
        .def("profile", [](const RadialSolution& s, double r) {
            const auto v = eval_profile(s, r);
            return py::make_tuple(v.value, v.derivative);
        });

    py::class_<LimitConstants>(m, "LimitConstants")
        .def_readonly("gamma", &LimitConstants::gamma)
        .def_readonly("gamma1", &LimitConstants::gamma1)
        .def_readonly("big_gamma", &LimitConstants::big_gamma)
        .def_readonly("grad_half", &LimitConstants::grad_half)
        .def_readonly("mass_half", &LimitConstants::mass_half)
        .def_readonly("wall_value", &LimitConstants::wall_value);

    m.def("solve_limit", [](const LimitConfig& c) { return solve_limit(c); }, py::arg("config"));
    m.def("limit_constants", &limit_constants, py::arg("solution"));
    m.def("check_identities", &check_identities, py::arg("solution"));

    py::class_<Shape>(m, "Shape")
        .def_static("interval", &Shape::interval, py::arg("length"))
        .def_static("rectangle", &Shape::rectangle, py::arg("width"), py::arg("height"))
        .def_static("disk", &Shape::disk, py::arg("radius"))
        .def_static("ellipse", &Shape::ellipse, py::arg("semi_x"), py::arg("semi_y"))
        .def("dim", &Shape::dim)
        .def("measure", &Shape::measure)
        .def("name", &Shape::name);

    py::class_<Mesh>(m, "Mesh")
        .def_readonly("dim", &Mesh::dim)
        .def_readonly("domain_measure", &Mesh::domain_measure)
        .def_property_readonly("vertices", &vertex_array)
        .def_property_readonly("elements", &element_array)
        .def_readonly("element_measure", &Mesh::element_measure)
        .def("vertex_count", &Mesh::vertex_count)
        .def("element_count", &Mesh::element_count)
        .def("export", &export_mesh);

    m.def("generate_mesh", [](const Shape& s, double h) { return generate_mesh(s, h).mesh; }, py::arg("shape"),
          py::arg("h"));
    m.def("import_mesh", &import_mesh, py::arg("text"));

    py::class_<Design>(m, "Design")
        .def_static("from_fractions", &Design::from_fractions, py::arg("mesh"), py::arg("beta"), py::arg("theta"))
        .def_readonly("beta", &Design::beta)
        .def_readonly("delta", &Design::delta)
        .def_readonly("element_weight", &Design::element_weight)
        .def("fractions", &Design::fractions);

    py::class_<EigenResult>(m, "EigenResult")
        .def_readonly("lam", &EigenResult::lambda)
        .def_readonly("u", &EigenResult::u)
        .def_readonly("residual", &EigenResult::residual)
        .def_readonly("rayleigh", &EigenResult::rayleigh);

    m.def("principal_lambda", [](const Mesh& mesh, const Design& d) { return principal_lambda(mesh, d); },
          py::arg("mesh"), py::arg("design"));
    m.def("admissible_delta", &admissible_delta, py::arg("mesh"), py::arg("beta"));
    m.def("bathtub", [](const Mesh& mesh, double beta, double delta, const std::vector<double>& f) {
        return bathtub_from_values(mesh, beta, delta, f).design;
    }, py::arg("mesh"), py::arg("beta"), py::arg("delta"), py::arg("f"));

    py::class_<OptState>(m, "OptState")
        .def_readonly("design", &OptState::design)
        .def_readonly("eigen", &OptState::eigen)
        .def_readonly("iteration", &OptState::iteration)
        .def_readonly("lambda_history", &OptState::lambda_history)
        .def_readonly("converged", &OptState::converged)
        .def_readonly("seed_id", &OptState::seed_id);

    py::class_<OptimizeResult>(m, "OptimizeResult")
        .def_readonly("best", &OptimizeResult::best)
        .def_readonly("runs", &OptimizeResult::runs)
        .def_readonly("co_optimal", &OptimizeResult::co_optimal);

    m.def(
        "optimize",
        [](const Mesh& mesh, double beta, double delta, int threads) {
            OptimizeOptions o;
            o.threads = threads;
            py::gil_scoped_release release;
            return optimize(mesh, beta, delta, default_seeds(mesh, beta, delta), o);
        },
        py::arg("mesh"), py::arg("beta"), py::arg("delta"), py::arg("threads") = 0);

    py::class_<ExpansionPair>(m, "ExpansionPair")
        .def(py::init([](double a, double b, double c, double d) { return ExpansionPair{a, b, c, d}; }),
             py::arg("a"), py::arg("b"), py::arg("c"), py::arg("d"))
        .def_readonly("a", &ExpansionPair::a)
        .def_readonly("b", &ExpansionPair::b)
        .def_readonly("c", &ExpansionPair::c)
        .def_readonly("d", &ExpansionPair::d);

    m.def("compose_expansions", [](const ExpansionPair& p, int dim) {
        const auto r = compose_expansions(p, dim);
        return py::make_tuple(r.coefficient, r.correction);
    }, py::arg("pair"), py::arg("dim"));
    m.def("competitor_expansions", &competitor_expansions, py::arg("solution"), py::arg("constants"),
          py::arg("mean_curvature"));
    m.def("predicted_bound", &predicted_bound, py::arg("delta"), py::arg("config"), py::arg("constants"),
          py::arg("Hhat"));

    py::class_<SweepRecord>(m, "SweepRecord")
        .def_readonly("delta", &SweepRecord::delta)
        .def_readonly("h", &SweepRecord::h)
        .def_readonly("od_value", &SweepRecord::od_value)
        .def_readonly("rescaled", &SweepRecord::rescaled)
        .def_readonly("maximizer", &SweepRecord::maximizer)
        .def_readonly("dist_boundary", &SweepRecord::dist_boundary)
        .def_readonly("annulus_ok", &SweepRecord::annulus_ok)
        .def_readonly("boundary_contact", &SweepRecord::boundary_contact)
        .def_readonly("min_over_D", &SweepRecord::min_over_D)
        .def_readonly("connected_components", &SweepRecord::connected_components);

    m.def(
        "sweep",
        [](const Shape& shape, double beta, const std::vector<double>& deltas, double h_factor,
           std::optional<double> h_exponent) {
            SweepOptions o;
            o.h_factor = h_factor;
            o.h_exponent = h_exponent;
            py::gil_scoped_release release;
            auto res = sweep(shape, beta, deltas, o);
            std::vector<std::pair<double, std::string>> failures;
            for (auto& f : res.failures) failures.emplace_back(f.delta, f.message);
            return std::make_pair(res.records, failures);
        },
        py::arg("shape"), py::arg("beta"), py::arg("deltas"), py::arg("h_factor") = 1.0 / 12.0,
        py::arg("h_exponent") = py::none());

    m.def("run_cli", [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = run_cli(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
    }, py::arg("args"));
}
