#include "eigendesign/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <Eigen/Core>
#include <boost/version.hpp>

#include "eigendesign/asymptotics.hpp"
#include "eigendesign/error.hpp"

#ifndef EIGENDESIGN_VERSION
#define EIGENDESIGN_VERSION "unknown"
#endif

namespace eigendesign {

namespace {

std::string num(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

template <class T>
std::string join(const std::vector<T>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ',';
        if constexpr (std::is_floating_point_v<T>)
            s += num(v[i]);
        else
            s += std::to_string(v[i]);
    }
    return s;
}

struct RunConfig {
    std::string command;
    std::string shape = "interval";
    double len = 1.0, width = 1.0, height = 1.0, radius = 1.0, semi_x = 2.0, semi_y = 1.0;
    std::string mesh_file;
    double beta = 1.0;
    double delta = 0.0;
    std::vector<double> deltas;
    double h = 0.0;             // 0: coupled to δ
    double h_factor = 1.0 / 12.0;
    double h_exponent = 0.0;    // 0: 1/N
    std::string seeds = "default";
    std::uint64_t rng_seed = 42;
    double tol = 1e-8;
    int max_iter = 100;
    int threads = 0;
    std::string mass_kind = "automatic";
    std::vector<double> center;
    int dim = 1;
    double mass = 1.0;
    std::string method = "shooting";
    std::vector<int> dims{1, 2, 3};
    std::vector<double> betas{0.5, 1.0, 4.0};
    int decay_j = 10;
    std::string out = ".";
    bool plot = false;
};

// Artifacts are collected first and written once the computation is done.
using Files = std::map<std::string, std::string>;

MassKind parse_mass_kind(const std::string& s) {
    static const std::map<std::string, MassKind> kinds{{"automatic", MassKind::automatic},
                                                       {"consistent", MassKind::consistent},
                                                       {"lumped", MassKind::lumped},
                                                       {"mixed", MassKind::mixed},
                                                       {"corrected", MassKind::corrected}};
    const auto it = kinds.find(s);
    if (it == kinds.end()) throw InvalidArgument("cli: unknown mass kind '" + s + "'");
    return it->second;
}

std::string mass_kind_name(MassKind k) {
    switch (k) {
        case MassKind::automatic: return "automatic";
        case MassKind::consistent: return "consistent";
        case MassKind::lumped: return "lumped";
        case MassKind::mixed: return "mixed";
        case MassKind::corrected: return "corrected";
    }
    return "?";
}

std::optional<SeedStrategy> parse_seeds(const std::string& s, std::uint64_t rng_seed) {
    if (s == "default") return std::nullopt;
    if (s == "centered") return SeedStrategy::centered();
    const auto colon = s.find(':');
    const std::string kind = s.substr(0, colon);
    int count = 8;
    if (colon != std::string::npos) {
        const std::string tail = s.substr(colon + 1);
        const auto [p, ec] = std::from_chars(tail.data(), tail.data() + tail.size(), count);
        if (ec != std::errc() || p != tail.data() + tail.size() || count < 1)
            throw InvalidArgument("cli: bad seed count in '" + s + "'");
    }
    if (kind == "caps") return SeedStrategy::boundary_caps(count);
    if (kind == "random") return SeedStrategy::random(count, rng_seed);
    throw InvalidArgument("cli: unknown seed strategy '" + s + "' (default, caps[:n], random[:n], centered)");
}

Shape make_shape(const RunConfig& c) {
    Shape s;
    if (c.shape == "interval")
        s = Shape::interval(c.len);
    else if (c.shape == "rectangle")
        s = Shape::rectangle(c.width, c.height);
    else if (c.shape == "disk")
        s = Shape::disk(c.radius);
    else if (c.shape == "ellipse")
        s = Shape::ellipse(c.semi_x, c.semi_y);
    else
        throw InvalidArgument("cli: unknown shape '" + c.shape + "'");
    s.validate();
    return s;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cli: cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::optional<Mesh> imported_mesh(const RunConfig& c) {
    if (c.mesh_file.empty()) return std::nullopt;
    return import_mesh(read_file(c.mesh_file));
}

GeneratedMesh build_mesh(const RunConfig& c, double delta) {
    if (auto m = imported_mesh(c)) {
        GeneratedMesh gm;
        gm.mesh = std::move(*m);
        gm.geometry = estimate_boundary_geometry(gm.mesh);
        return gm;
    }
    const Shape shape = make_shape(c);
    const double p = c.h_exponent > 0.0 ? c.h_exponent : 1.0 / shape.dim();
    return generate_mesh(shape, c.h > 0.0 ? c.h : c.h_factor * std::pow(delta, p));
}

std::string profile_csv(const Mesh& mesh, const Eigen::VectorXd& u) {
    std::string s = "x,y,u\n";
    for (int i = 0; i < mesh.vertex_count(); ++i)
        s += num(mesh.vertices[i][0]) + ',' + num(mesh.vertices[i][1]) + ',' + num(u[i]) + '\n';
    return s;
}

std::string profile_plot(int dim) {
    std::string s = "set datafile separator ','\nset key autotitle columnhead\n";
    if (dim == 1) return s + "set xlabel 'x'\nplot 'profile.csv' using 1:3 with lines\n";
    return s + "set view map\nsplot 'profile.csv' using 1:2:3 with points pointtype 5 pointsize 0.3 palette\n";
}

struct Piece {
    double measure = 0.0;
    double x_min = 0.0, x_max = 0.0, y_min = 0.0, y_max = 0.0;
};

// Connected pieces of D in element order of their first element. In 1D the
// fractional element is shortened on the side away from the full part.
std::vector<Piece> design_pieces(const Mesh& mesh, const Design& design) {
    const auto theta = design.fractions();
    std::vector<Piece> pieces;
    if (mesh.dim == 1) {
        std::vector<int> order(mesh.element_count());
        std::iota(order.begin(), order.end(), 0);
        auto left = [&](int e) { return std::min(mesh.vertices[mesh.elements[e][0]][0], mesh.vertices[mesh.elements[e][1]][0]); };
        auto right = [&](int e) { return std::max(mesh.vertices[mesh.elements[e][0]][0], mesh.vertices[mesh.elements[e][1]][0]); };
        std::sort(order.begin(), order.end(), [&](int a, int b) { return left(a) < left(b); });
        for (std::size_t i = 0; i < order.size();) {
            if (theta[order[i]] <= 0.0) {
                ++i;
                continue;
            }
            std::size_t j = i;
            Piece p;
            for (; j < order.size() && theta[order[j]] > 0.0; ++j)
                p.measure += theta[order[j]] * mesh.element_measure[order[j]];
            const int first = order[i], last = order[j - 1];
            p.x_min = left(first);
            p.x_max = right(last);
            if (theta[first] < 1.0)
                p.x_min = right(first) - theta[first] * mesh.element_measure[first];
            else if (theta[last] < 1.0)
                p.x_max = left(last) + theta[last] * mesh.element_measure[last];
            pieces.push_back(p);
            i = j;
        }
        return pieces;
    }
    const auto neighbors = element_neighbors(mesh);
    std::vector<char> seen(mesh.element_count(), 0);
    for (int e = 0; e < mesh.element_count(); ++e) {
        if (theta[e] <= 0.0 || seen[e]) continue;
        Piece p;
        p.x_min = p.y_min = std::numeric_limits<double>::infinity();
        p.x_max = p.y_max = -std::numeric_limits<double>::infinity();
        std::vector<int> stack{e};
        seen[e] = 1;
        while (!stack.empty()) {
            const int cur = stack.back();
            stack.pop_back();
            p.measure += theta[cur] * mesh.element_measure[cur];
            for (int k = 0; k < 3; ++k) {
                const Point& v = mesh.vertices[mesh.elements[cur][k]];
                p.x_min = std::min(p.x_min, v[0]);
                p.x_max = std::max(p.x_max, v[0]);
                p.y_min = std::min(p.y_min, v[1]);
                p.y_max = std::max(p.y_max, v[1]);
            }
            for (int nb : neighbors[cur])
                if (theta[nb] > 0.0 && !seen[nb]) {
                    seen[nb] = 1;
                    stack.push_back(nb);
                }
        }
        pieces.push_back(p);
    }
    return pieces;
}

// ---------------------------------------------------------------- commands

void cmd_limit(const RunConfig& c, Files& files, std::ostream& out) {
    const LimitConfig cfg{c.dim, c.beta, c.mass};
    cfg.validate();
    const ProfileMethod method = c.method == "bessel" ? ProfileMethod::bessel : ProfileMethod::shooting;
    const RadialSolution sol = solve_limit(cfg, method);
    const LimitConstants k = limit_constants(sol);
    const auto ids = check_identities(sol);
    double worst = 0.0;
    for (const auto& [name, r] : ids) worst = std::max(worst, std::abs(r));

    out << "mu=" << num(sol.mu) << "\nrbar=" << num(sol.rbar) << "\nGamma=" << num(k.big_gamma)
        << "\ngamma=" << num(k.gamma) << "\ngamma1=" << num(k.gamma1) << "\ngrad_half=" << num(k.grad_half)
        << "\nmass_half=" << num(k.mass_half) << '\n';
    for (const auto& [name, r] : ids) out << "residual." << name << '=' << num(r) << '\n';

    files["results.csv"] =
        "dim,beta,mass,mu,rbar,gamma,gamma1,Gamma,grad_half,mass_half,wall_value,max_identity_residual\n" +
        std::to_string(c.dim) + ',' + num(c.beta) + ',' + num(c.mass) + ',' + num(sol.mu) + ',' + num(sol.rbar) + ',' +
        num(k.gamma) + ',' + num(k.gamma1) + ',' + num(k.big_gamma) + ',' + num(k.grad_half) + ',' + num(k.mass_half) +
        ',' + num(k.wall_value) + ',' + num(worst) + '\n';
    if (c.plot) {
        std::string prof = "r,w,dw\n";
        const double rmax = sol.rbar + 10.0 / sol.decay_rate();
        for (int i = 0; i <= 200; ++i) {
            const double r = rmax * i / 200.0;
            const auto v = eval_profile(sol, r);
            prof += num(r) + ',' + num(v.value) + ',' + num(v.derivative) + '\n';
        }
        files["profile.csv"] = prof;
        files["plot.gp"] = "set datafile separator ','\nset key autotitle columnhead\nset xlabel 'r'\n"
                           "set arrow from " + num(sol.rbar) + ", graph 0 to " + num(sol.rbar) +
                           ", graph 1 nohead dashtype 2\nplot 'profile.csv' using 1:2 with lines\n";
    }
}

void cmd_identities(const RunConfig& c, Files& files, std::ostream& out) {
    std::string csv;
    double worst = 0.0;
    for (int n : c.dims) {
        for (double b : c.betas) {
            const LimitConfig cfg{n, b, 1.0};
            cfg.validate();
            const auto ids = check_identities(solve_limit(cfg));
            if (csv.empty()) {
                csv = "dim,beta";
                for (const auto& [name, r] : ids) csv += ',' + name;
                csv += '\n';
            }
            csv += std::to_string(n) + ',' + num(b);
            for (const auto& [name, r] : ids) {
                csv += ',' + num(r);
                worst = std::max(worst, std::abs(r));
            }
            csv += '\n';
        }
    }
    out << "cases=" << c.dims.size() * c.betas.size() << "\nmax_residual=" << num(worst) << '\n';
    files["results.csv"] = csv;
}

void cmd_solve(const RunConfig& c, Files& files, std::ostream& out) {
    const GeneratedMesh gm = build_mesh(c, c.delta);
    const Mesh& mesh = gm.mesh;
    if (!(c.delta > 0.0) || !(c.delta < admissible_delta(mesh, c.beta)))
        throw InvalidArgument("cli: --delta must lie in (0, beta|Omega|/(1+beta))");
    Design design;
    if (c.center.empty()) {
        design = seed_designs(mesh, c.beta, c.delta, SeedStrategy::centered()).front();
    } else {
        if (static_cast<int>(c.center.size()) != mesh.dim) throw InvalidArgument("cli: --center needs one coordinate per dimension");
        const Point p{c.center[0], mesh.dim == 2 ? c.center[1] : 0.0};
        std::vector<double> d(mesh.element_count());
        for (int e = 0; e < mesh.element_count(); ++e) {
            const Point q = mesh.centroid(e);
            d[e] = std::hypot(q[0] - p[0], q[1] - p[1]);
        }
        std::vector<int> order(mesh.element_count());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return d[a] < d[b]; });
        design = fill_design(mesh, c.beta, c.delta, order);
    }
    SolverOptions so;
    so.mass = parse_mass_kind(c.mass_kind);
    PrincipalSolver solver(mesh, so);
    const EigenResult res = solver.solve(design);

    out << "lambda=" << num(res.lambda) << "\nmass_kind=" << mass_kind_name(res.mass) << "\nnodes=" << mesh.vertex_count()
        << '\n';
    files["results.csv"] = "lambda,delta,beta,h,nodes,elements,mass_kind,rho_evaluations,rayleigh,residual\n" +
                           num(res.lambda) + ',' + num(c.delta) + ',' + num(c.beta) + ',' +
                           num(mesh.max_element_diameter()) + ',' + std::to_string(mesh.vertex_count()) + ',' +
                           std::to_string(mesh.element_count()) + ',' + mass_kind_name(res.mass) + ',' +
                           std::to_string(res.iterations) + ',' + num(res.rayleigh) + ',' + num(res.residual) + '\n';
    files["profile.csv"] = profile_csv(mesh, res.u);
    if (c.plot) files["plot.gp"] = profile_plot(mesh.dim);
}

OptimizeOptions optimize_options(const RunConfig& c) {
    OptimizeOptions o;
    o.tol = c.tol;
    o.max_iter = c.max_iter;
    o.threads = c.threads;
    o.solver.mass = parse_mass_kind(c.mass_kind);
    if (!(c.tol > 0.0)) throw InvalidArgument("cli: --tol must be > 0");
    if (c.max_iter < 1) throw InvalidArgument("cli: --max-iter must be >= 1");
    if (c.threads < 0) throw InvalidArgument("cli: --threads must be >= 0");
    return o;
}

void cmd_optimize(const RunConfig& c, Files& files, std::ostream& out) {
    const GeneratedMesh gm = build_mesh(c, c.delta);
    const Mesh& mesh = gm.mesh;
    const auto strategy = parse_seeds(c.seeds, c.rng_seed);
    const OptimizeOptions opts = optimize_options(c);
    const auto seeds = strategy ? seed_designs(mesh, c.beta, c.delta, *strategy) : default_seeds(mesh, c.beta, c.delta);
    const OptimizeResult res = optimize(mesh, c.beta, c.delta, seeds, opts);
    const OptState& best = res.best;

    const auto pieces = design_pieces(mesh, best.design);
    std::string csv = "lambda,component,measure,x_min,x_max,y_min,y_max\n";
    for (std::size_t i = 0; i < pieces.size(); ++i) {
        const Piece& p = pieces[i];
        csv += num(best.eigen.lambda) + ',' + std::to_string(i) + ',' + num(p.measure) + ',' + num(p.x_min) + ',' +
               num(p.x_max) + ',' + num(p.y_min) + ',' + num(p.y_max) + '\n';
    }
    files["results.csv"] = csv;

    std::set<int> co(res.co_optimal.begin(), res.co_optimal.end());
    std::string runs = "seed_id,lambda,iterations,converged,co_optimal\n";
    for (std::size_t i = 0; i < res.runs.size(); ++i) {
        const OptState& r = res.runs[i];
        runs += std::to_string(r.seed_id) + ',' + num(r.eigen.lambda) + ',' + std::to_string(r.iteration) + ',' +
                std::to_string(int(r.converged)) + ',' + std::to_string(int(co.count(static_cast<int>(i)))) + '\n';
    }
    for (const auto& f : res.failures) runs += std::to_string(f.seed_id) + ",nan,0,0,0\n";
    files["runs.csv"] = runs;

    const auto theta = best.design.fractions();
    std::string design = "element,centroid_x,centroid_y,theta\n";
    for (int e = 0; e < mesh.element_count(); ++e) {
        if (theta[e] <= 0.0) continue;
        const Point q = mesh.centroid(e);
        design += std::to_string(e) + ',' + num(q[0]) + ',' + num(q[1]) + ',' + num(theta[e]) + '\n';
    }
    files["design.csv"] = design;
    files["profile.csv"] = profile_csv(mesh, best.eigen.u);
    if (c.plot) files["plot.gp"] = profile_plot(mesh.dim);

    out << "lambda=" << num(best.eigen.lambda) << "\niterations=" << best.iteration
        << "\nconverged=" << int(best.converged) << "\nseeds=" << seeds.size() << "\nfailed_seeds=" << res.failures.size()
        << "\nco_optimal=" << res.co_optimal.size() << "\nD=";
    for (std::size_t i = 0; i < pieces.size(); ++i) {
        if (i) out << ' ';
        if (mesh.dim == 1)
            out << '(' << num(pieces[i].x_min) << ',' << num(pieces[i].x_max) << ')';
        else
            out << "[" << num(pieces[i].x_min) << ',' << num(pieces[i].x_max) << "]x[" << num(pieces[i].y_min) << ','
                << num(pieces[i].y_max) << ']';
    }
    out << '\n';
    for (const auto& f : res.failures) out << "seed " << f.seed_id << " failed: " << f.message << '\n';
}

void cmd_sweep(const RunConfig& c, Files& files, std::ostream& out) {
    if (c.deltas.empty()) throw InvalidArgument("cli: --deltas is required");
    std::vector<double> deltas = c.deltas;
    std::sort(deltas.begin(), deltas.end(), std::greater<>());

    SweepOptions so;
    so.h_factor = c.h_factor;
    if (c.h_exponent > 0.0) so.h_exponent = c.h_exponent;
    if (c.h > 0.0) so.h = c.h;
    so.mesh = imported_mesh(c);
    so.seeds = parse_seeds(c.seeds, c.rng_seed);
    so.optimize = optimize_options(c);
    so.keep_states = true;
    if (c.decay_j < 0) throw InvalidArgument("cli: --decay-j must be >= 0");
    const Shape shape = so.mesh ? Shape{} : make_shape(c);
    const int n = so.mesh ? so.mesh->dim : shape.dim();

    const SweepResult res = sweep(shape, c.beta, deltas, so);

    const LimitConfig lc{n, c.beta, 1.0};
    const LimitConstants k = limit_constants(solve_limit(lc));
    std::string csv = "delta,h,nodes,od_value,rescaled,predicted_bound,maximizer_x,maximizer_y,dist_boundary";
    for (double eps : so.annulus_eps) csv += ",annulus_ok_" + num(eps);
    csv += ",boundary_contact,min_over_D,connected_components,iterations,converged\n";
    for (std::size_t i = 0; i < res.records.size(); ++i) {
        const SweepRecord& r = res.records[i];
        const double hhat = res.states[i].mesh.geometry.max_curvature;
        double bound = std::nan("");
        try {
            bound = predicted_bound(r.delta, lc, k, hhat);
        } catch (const InvalidArgument&) {
        }
        csv += num(r.delta) + ',' + num(r.h) + ',' + std::to_string(r.nodes) + ',' + num(r.od_value) + ',' +
               num(r.rescaled) + ',' + num(bound) + ',' + num(r.maximizer[0]) + ',' + num(r.maximizer[1]) + ',' +
               num(r.dist_boundary);
        for (bool ok : r.annulus_ok) csv += ok ? ",1" : ",0";
        csv += ',' + num(r.boundary_contact) + ',' + num(r.min_over_D) + ',' + std::to_string(r.connected_components) +
               ',' + std::to_string(r.iterations) + ',' + std::to_string(int(r.converged)) + '\n';
    }
    files["results.csv"] = csv;

    std::string fails = "delta,message\n";
    for (const auto& f : res.failures) {
        std::string msg = f.message;
        std::replace(msg.begin(), msg.end(), '"', '\'');
        fails += num(f.delta) + ",\"" + msg + "\"\n";
        out << "delta " << num(f.delta) << " failed: " << f.message << '\n';
    }
    files["failures.csv"] = fails;
    if (res.records.empty()) throw SolverError("sweep: every delta failed");

    const SweepState& last = res.states.back();
    const DecayReport decay = decay_report(last.mesh.mesh, last.state.eigen, last.delta, c.decay_j);
    std::string dec = "j,radius,value\n";
    for (const auto& row : decay.rows) dec += std::to_string(row.j) + ',' + num(row.radius) + ',' + num(row.value) + '\n';
    files["decay.csv"] = dec;

    if (c.plot)
        files["plot.gp"] = "set datafile separator ','\nset key autotitle columnhead\nset logscale xy\n"
                           "set xlabel 'delta'\nplot 'results.csv' using 1:4 with linespoints, "
                           "'' using 1:6 with lines\n";

    out << "records=" << res.records.size() << "\nfailures=" << res.failures.size()
        << "\nlimit_coefficient=" << num(std::pow(2.0, -2.0 / n) * solve_limit(lc).mu) << '\n';
    for (const auto& r : res.records) out << "delta=" << num(r.delta) << " rescaled=" << num(r.rescaled) << '\n';
    if (res.records.size() >= 3) out << "loglog_slope=" << num(loglog_slope(res.records, 3)) << '\n';
    out << "decay_slope=" << num(decay.slope) << '\n';
}

// ---------------------------------------------------------------- parsing

const std::set<std::string> kShapeFlags{"--len", "--width", "--height", "--radius", "--semi-x", "--semi-y"};

std::string flag_name(const std::string& tok) { return tok.substr(0, tok.find('=')); }

// Flags from --config, dropping those also given on the command line.
std::vector<std::string> merge_config(const std::vector<std::string>& args) {
    std::vector<std::string> cli;
    std::string path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config") {
            if (i + 1 >= args.size()) throw InvalidArgument("cli: --config needs a path");
            path = args[++i];
        } else if (args[i].rfind("--config=", 0) == 0) {
            path = args[i].substr(9);
        } else {
            cli.push_back(args[i]);
        }
    }
    if (path.empty()) return cli;
    std::set<std::string> given;
    for (const auto& t : cli)
        if (t.rfind("--", 0) == 0) given.insert(flag_name(t));

    std::vector<std::string> merged;
    std::istringstream in(read_file(path));
    std::string line;
    while (std::getline(in, line)) {
        line = line.substr(0, line.find('#'));
        std::istringstream ls(line);
        std::vector<std::string> toks;
        for (std::string t; ls >> t;) toks.push_back(t);
        if (toks.empty()) continue;
        if (toks[0].rfind("--", 0) != 0) throw InvalidArgument("cli: config line does not start with a flag: " + line);
        if (flag_name(toks[0]) == "--config" || given.count(flag_name(toks[0]))) continue;
        merged.insert(merged.end(), toks.begin(), toks.end());
    }
    // The subcommand must stay first.
    if (!cli.empty() && cli[0].rfind("-", 0) != 0) {
        merged.insert(merged.begin(), cli[0]);
        merged.insert(merged.end(), cli.begin() + 1, cli.end());
    } else {
        merged.insert(merged.end(), cli.begin(), cli.end());
    }
    return merged;
}

std::vector<std::pair<std::string, std::string>> resolved_flags(const RunConfig& c) {
    std::vector<std::pair<std::string, std::string>> f;
    auto shape_flags = [&] {
        if (!c.mesh_file.empty()) {
            f.push_back({"--mesh-file", c.mesh_file});
            return;
        }
        f.push_back({"--shape", c.shape});
        if (c.shape == "interval") f.push_back({"--len", num(c.len)});
        if (c.shape == "rectangle") {
            f.push_back({"--width", num(c.width)});
            f.push_back({"--height", num(c.height)});
        }
        if (c.shape == "disk") f.push_back({"--radius", num(c.radius)});
        if (c.shape == "ellipse") {
            f.push_back({"--semi-x", num(c.semi_x)});
            f.push_back({"--semi-y", num(c.semi_y)});
        }
    };
    auto mesh_flags = [&] {
        if (!c.mesh_file.empty()) return;
        if (c.h > 0.0) {
            f.push_back({"--h", num(c.h)});
        } else {
            f.push_back({"--h-factor", num(c.h_factor)});
            if (c.h_exponent > 0.0) f.push_back({"--h-exponent", num(c.h_exponent)});
        }
    };
    auto opt_flags = [&] {
        f.push_back({"--seeds", c.seeds});
        f.push_back({"--rng-seed", std::to_string(c.rng_seed)});
        f.push_back({"--tol", num(c.tol)});
        f.push_back({"--max-iter", std::to_string(c.max_iter)});
        f.push_back({"--threads", std::to_string(c.threads)});
        f.push_back({"--mass-kind", c.mass_kind});
    };
    if (c.command == "limit") {
        f.push_back({"--dim", std::to_string(c.dim)});
        f.push_back({"--beta", num(c.beta)});
        f.push_back({"--mass", num(c.mass)});
        f.push_back({"--method", c.method});
    } else if (c.command == "identities") {
        f.push_back({"--dims", join(c.dims)});
        f.push_back({"--betas", join(c.betas)});
    } else {
        shape_flags();
        f.push_back({"--beta", num(c.beta)});
        if (c.command == "sweep")
            f.push_back({"--deltas", join(c.deltas)});
        else
            f.push_back({"--delta", num(c.delta)});
        mesh_flags();
        if (c.command == "solve") {
            if (!c.center.empty()) f.push_back({"--center", join(c.center)});
            f.push_back({"--mass-kind", c.mass_kind});
        } else {
            opt_flags();
        }
        if (c.command == "sweep") f.push_back({"--decay-j", std::to_string(c.decay_j)});
    }
    f.push_back({"--out", c.out});
    if (c.plot) f.push_back({"--plot", ""});
    return f;
}

std::string meta_text(const RunConfig& c, const std::vector<std::string>& files) {
    std::string s = "# eigendesign " EIGENDESIGN_VERSION "\n";
    s += "# eigen " + std::to_string(EIGEN_WORLD_VERSION) + '.' + std::to_string(EIGEN_MAJOR_VERSION) + '.' +
         std::to_string(EIGEN_MINOR_VERSION) + "\n# boost " BOOST_LIB_VERSION "\n# cli11 " CLI11_VERSION "\n";
#ifdef __VERSION__
    s += "# compiler " __VERSION__ "\n";
#endif
    s += "# files";
    for (const auto& f : files) s += ' ' + f;
    s += "\n# rerun: eigendesign " + c.command + " --config meta.txt\n# command " + c.command + '\n';
    for (const auto& [flag, value] : resolved_flags(c)) s += value.empty() ? flag + '\n' : flag + ' ' + value + '\n';
    return s;
}

const char* kSchemas =
    "CSV schemas (floats at 17 significant digits):\n"
    "  limit       results.csv: dim,beta,mass,mu,rbar,gamma,gamma1,Gamma,grad_half,mass_half,wall_value,\n"
    "                           max_identity_residual\n"
    "  identities  results.csv: dim,beta,c1_derivative,c1_value,eigen,pohozaev,technical\n"
    "  solve       results.csv: lambda,delta,beta,h,nodes,elements,mass_kind,rho_evaluations,rayleigh,residual\n"
    "              profile.csv: x,y,u\n"
    "  optimize    results.csv: lambda,component,measure,x_min,x_max,y_min,y_max (one row per piece of D)\n"
    "              runs.csv: seed_id,lambda,iterations,converged,co_optimal; design.csv; profile.csv\n"
    "  sweep       results.csv: delta,h,nodes,od_value,rescaled,predicted_bound,maximizer_x,maximizer_y,\n"
    "                           dist_boundary,annulus_ok_0.25,annulus_ok_0.5,boundary_contact,min_over_D,\n"
    "                           connected_components,iterations,converged (rows by delta descending)\n"
    "              failures.csv: delta,message; decay.csv: j,radius,value (smallest delta)\n"
    "Every run also writes meta.txt; --plot adds a gnuplot script plot.gp.\n"
    "Exit status: 0 success, 1 usage error, 2 solver failure. EIGENDESIGN_THREADS caps worker threads.";

}  // namespace

int run_cli(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
    RunConfig c;
    CLI::App app{"Optimal favorable sets for the weighted Neumann eigenvalue problem", "eigendesign"};
    app.set_help_flag("--help", "Print this help message and exit");  // -h would clash with --h
    app.require_subcommand(1);
    app.footer(kSchemas);

    std::map<std::string, CLI::App*> subs;
    subs["limit"] = app.add_subcommand("limit", "Radial limit problem on R^N and its constants");
    subs["identities"] = app.add_subcommand("identities", "Integral identity residuals of the limit profile");
    subs["solve"] = app.add_subcommand("solve", "Principal eigenvalue of one ball-shaped design");
    subs["optimize"] = app.add_subcommand("optimize", "Minimize the principal eigenvalue at measure delta");
    subs["sweep"] = app.add_subcommand("sweep", "Optimize over a decreasing sequence of deltas");

    std::vector<CLI::Option*> shape_opts;
    for (const auto& [name, sub] : subs) {
        sub->add_option("--out", c.out, "Output directory")->capture_default_str();
        sub->add_flag("--plot", c.plot, "Also write plot.gp");
        sub->add_option("--config", "Flags one per line; command-line flags take precedence");
        if (name == "limit") {
            sub->add_option("--dim", c.dim, "Dimension N")->capture_default_str();
            sub->add_option("--beta", c.beta, "Unfavorable weight magnitude")->capture_default_str();
            sub->add_option("--mass", c.mass, "Measure of the favorable ball")->capture_default_str();
            sub->add_option("--method", c.method, "shooting or bessel")
                ->check(CLI::IsMember({"shooting", "bessel"}))
                ->capture_default_str();
            continue;
        }
        if (name == "identities") {
            sub->add_option("--dims", c.dims, "Dimensions")->delimiter(',')->capture_default_str();
            sub->add_option("--betas", c.betas, "Beta values")->delimiter(',')->capture_default_str();
            continue;
        }
        sub->add_option("--shape", c.shape, "interval, rectangle, disk or ellipse")
            ->check(CLI::IsMember({"interval", "rectangle", "disk", "ellipse"}))
            ->capture_default_str();
        shape_opts.push_back(sub->add_option("--len", c.len, "Interval length")->capture_default_str());
        shape_opts.push_back(sub->add_option("--width", c.width, "Rectangle width")->capture_default_str());
        shape_opts.push_back(sub->add_option("--height", c.height, "Rectangle height")->capture_default_str());
        shape_opts.push_back(sub->add_option("--radius", c.radius, "Disk radius")->capture_default_str());
        shape_opts.push_back(sub->add_option("--semi-x", c.semi_x, "Ellipse x semi-axis")->capture_default_str());
        shape_opts.push_back(sub->add_option("--semi-y", c.semi_y, "Ellipse y semi-axis")->capture_default_str());
        sub->add_option("--mesh-file", c.mesh_file, "Mesh in the text format instead of a generated shape");
        sub->add_option("--beta", c.beta, "Unfavorable weight magnitude")->capture_default_str();
        if (name == "sweep")
            sub->add_option("--deltas", c.deltas, "Comma-separated measures of D")->delimiter(',')->required();
        else
            sub->add_option("--delta", c.delta, "Measure of D")->required();
        sub->add_option("--h", c.h, "Fixed mesh size (default: h-factor * delta^(1/N))");
        sub->add_option("--h-factor", c.h_factor, "Mesh size factor")->capture_default_str();
        sub->add_option("--h-exponent", c.h_exponent, "Exponent of delta in the mesh size (default 1/N)");
        sub->add_option("--mass-kind", c.mass_kind, "automatic, consistent, lumped, mixed or corrected")
            ->capture_default_str();
        if (name == "solve") {
            sub->add_option("--center", c.center, "Center of the ball design (default: centroid of Omega)")
                ->delimiter(',');
            continue;
        }
        sub->add_option("--seeds", c.seeds, "default, caps[:n], random[:n] or centered")->capture_default_str();
        sub->add_option("--rng-seed", c.rng_seed, "Seed of random initial designs")->capture_default_str();
        sub->add_option("--tol", c.tol, "Relative stopping tolerance")->capture_default_str();
        sub->add_option("--max-iter", c.max_iter, "Iterations per seed")->capture_default_str();
        sub->add_option("--threads", c.threads, "Worker threads (0: EIGENDESIGN_THREADS or all cores)")
            ->capture_default_str();
        if (name == "sweep") sub->add_option("--decay-j", c.decay_j, "Rows of the decay table")->capture_default_str();
    }

    try {
        const std::vector<std::string> args = merge_config(raw_args);
        std::vector<const char*> argv{"eigendesign"};
        for (const auto& a : args) argv.push_back(a.c_str());
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_usage;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_usage;
    }

    for (const auto& [name, sub] : subs)
        if (sub->parsed()) c.command = name;

    try {
        if (c.command != "limit" && c.command != "identities") {
            bool explicit_shape = subs[c.command]->get_option("--shape")->count() > 0;
            if (!c.mesh_file.empty() && explicit_shape)
                throw InvalidArgument("cli: --mesh-file and --shape are mutually exclusive");
            for (CLI::Option* o : shape_opts) {
                if (o->count() == 0) continue;
                const std::string flag = o->get_name();
                const bool fits = !c.mesh_file.empty() ? false
                                  : c.shape == "interval"  ? flag == "--len"
                                  : c.shape == "rectangle" ? (flag == "--width" || flag == "--height")
                                  : c.shape == "disk"      ? flag == "--radius"
                                                           : (flag == "--semi-x" || flag == "--semi-y");
                if (!fits) throw InvalidArgument("cli: " + flag + " does not apply to " +
                                                 (c.mesh_file.empty() ? "shape " + c.shape : "--mesh-file"));
            }
            if (c.h > 0.0 && (subs[c.command]->get_option("--h-factor")->count() > 0 ||
                              subs[c.command]->get_option("--h-exponent")->count() > 0))
                throw InvalidArgument("cli: --h excludes --h-factor and --h-exponent");
            if (c.h < 0.0 || !(c.h_factor > 0.0) || c.h_exponent < 0.0)
                throw InvalidArgument("cli: mesh size parameters must be positive");
            parse_mass_kind(c.mass_kind);
            if (c.command != "solve") parse_seeds(c.seeds, c.rng_seed);
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_usage;
    }

    Files files;
    try {
        if (c.command == "limit")
            cmd_limit(c, files, out);
        else if (c.command == "identities")
            cmd_identities(c, files, out);
        else if (c.command == "solve")
            cmd_solve(c, files, out);
        else if (c.command == "optimize")
            cmd_optimize(c, files, out);
        else
            cmd_sweep(c, files, out);
    } catch (const InvalidArgument& e) {
        err << "error: " << e.what() << '\n';
        return exit_usage;
    } catch (const ParseError& e) {
        err << "error: mesh file: " << e.what() << '\n';
        return exit_usage;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_solver;
    }

    try {
        std::vector<std::string> names;
        for (const auto& [name, text] : files) names.push_back(name);
        files["meta.txt"] = meta_text(c, names);
        std::filesystem::create_directories(c.out);
        for (const auto& [name, text] : files) {
            std::ofstream f(std::filesystem::path(c.out) / name, std::ios::binary);
            f << text;
            if (!f) throw std::runtime_error("cannot write " + name);
        }
    } catch (const std::exception& e) {
        err << "error: output: " << e.what() << '\n';
        return exit_solver;
    }
    return exit_ok;
}

}  // namespace eigendesign
