#include "eigendesign/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "eigendesign/error.hpp"

namespace eigendesign {

void ExpansionPair::validate() const {
    if (!(a > 0.0) || !(c > 0.0)) throw InvalidArgument("asymptotics: expansion coefficients a and c must be > 0");
    if (!std::isfinite(b) || !std::isfinite(d)) throw InvalidArgument("asymptotics: b and d must be finite");
}

ComposedExpansion compose_expansions(const ExpansionPair& p, int dim) {
    p.validate();
    if (dim < 1) throw InvalidArgument("asymptotics: dimension must be >= 1");
    const double n = dim;
    return {p.c * std::pow(p.a, 2.0 / n), std::pow(p.a, -1.0 / n) * (2.0 * p.b + n * p.d) / n};
}

ExpansionPair competitor_expansions(const RadialSolution& sol, const LimitConstants& k, double mean_curvature) {
    if (std::abs(sol.config.mass - 1.0) > 1e-14)
        throw InvalidArgument("asymptotics: competitor expansions need the unit-measure limit (mass = 1)");
    const int n = sol.config.dim;
    const double alpha = (n - 1) * mean_curvature;
    const double geom = unit_ball_volume(n - 1) * std::pow(unit_ball_volume(n), -(n + 1.0) / n);
    ExpansionPair p;
    p.a = 0.5;
    p.b = 2.0 / (n + 1) * geom * alpha;
    p.c = sol.mu;
    // Quotient of the two half-space expansions, to first order in r.
    p.d = -alpha * (sol.mu * k.gamma1 - (n - 1) * k.gamma) / (sol.mu * k.mass_half);
    return p;
}

double predicted_bound(double delta, const LimitConfig& config, const LimitConstants& constants, double Hhat) {
    config.validate();
    if (!(delta > 0.0)) throw InvalidArgument("asymptotics: delta must be > 0");
    if (!(Hhat >= 0.0)) throw InvalidArgument("asymptotics: Hhat must be >= 0");
    const double n = config.dim;
    LimitConfig unit = config;
    unit.mass = 1.0;
    const double im = solve_limit(unit).mu;
    const double corr = constants.big_gamma * Hhat * std::pow(delta, 1.0 / n);
    if (!(corr < 1.0)) throw InvalidArgument("asymptotics: delta too large, curvature correction reaches 1");
    return std::pow(4.0, -1.0 / n) * im * std::pow(delta, -2.0 / n) * (1.0 - corr);
}

namespace {

double dist(const Point& p, const Point& q) { return std::hypot(p[0] - q[0], p[1] - q[1]); }

// ∫ u² with the consistent P1 mass.
double l2_norm_squared(const Mesh& mesh, const Eigen::VectorXd& u) {
    const int k = mesh.nodes_per_element();
    double total = 0.0;
    for (int e = 0; e < mesh.element_count(); ++e) {
        double s = 0.0, s2 = 0.0;
        for (int i = 0; i < k; ++i) {
            const double v = u[mesh.elements[e][i]];
            s += v;
            s2 += v * v;
        }
        total += mesh.element_measure[e] * (s2 + s * s) / (k * (k + 1));
    }
    return total;
}

int argmax_node(const Eigen::VectorXd& u) {
    int best = 0;
    for (int i = 1; i < u.size(); ++i)
        if (u[i] > u[best]) best = i;
    return best;
}

}  // namespace

SweepRecord measure(const Mesh& mesh, const OptState& state, double delta, const std::vector<double>& annulus_eps) {
    const Design& design = state.design;
    const Eigen::VectorXd& u = state.eigen.u;
    const int n = mesh.dim;
    SweepRecord r;
    r.delta = delta;
    r.nodes = mesh.vertex_count();
    r.h = mesh.max_element_diameter();
    r.od_value = state.eigen.lambda;
    r.rescaled = r.od_value * std::pow(delta, 2.0 / n);
    r.iterations = state.iteration;
    r.converged = state.converged;
    r.best_seed = state.seed_id;

    r.maximizer_node = argmax_node(u);
    r.maximizer = mesh.vertices[r.maximizer_node];
    r.dist_boundary = mesh.distance_to_boundary(r.maximizer);

    const std::vector<double> theta = design.fractions();
    auto in_d = [&](int e) { return theta[e] > 0.0; };

    // Centroid proxy for B_{r-} ∩ Ω ⊂ D ⊂ B_{r+}.
    r.annulus_eps = annulus_eps;
    for (double eps : annulus_eps) {
        const double r_minus = std::pow(2.0 * delta * (1.0 - eps) / unit_ball_volume(n), 1.0 / n);
        const double r_plus = std::pow(2.0 * delta * (1.0 + eps) / unit_ball_volume(n), 1.0 / n);
        bool ok = true;
        for (int e = 0; e < mesh.element_count() && ok; ++e) {
            const double de = dist(mesh.centroid(e), r.maximizer);
            if (in_d(e) ? de > r_plus : de < r_minus) ok = false;
        }
        r.annulus_ok.push_back(ok);
    }

    for (std::size_t f = 0; f < mesh.boundary_edges.size(); ++f)
        if (design.element_weight[mesh.boundary_edge_element[f]] >= 0.0)
            r.boundary_contact += mesh.boundary_edge_length(static_cast<int>(f));

    // inf over the nodes of full elements of D; the fractional element only if D has nothing else.
    const double scale = std::sqrt(delta / l2_norm_squared(mesh, u));
    double lo = std::numeric_limits<double>::infinity();
    for (int pass = 0; pass < 2 && !std::isfinite(lo); ++pass) {
        for (int e = 0; e < mesh.element_count(); ++e) {
            if (pass == 0 ? theta[e] < 1.0 : !in_d(e)) continue;
            for (int i = 0; i < mesh.nodes_per_element(); ++i) lo = std::min(lo, u[mesh.elements[e][i]]);
        }
    }
    r.min_over_D = lo * scale;

    const auto neighbors = element_neighbors(mesh);
    std::vector<char> seen(mesh.element_count(), 0);
    for (int e = 0; e < mesh.element_count(); ++e) {
        if (!in_d(e) || seen[e]) continue;
        ++r.connected_components;
        std::vector<int> stack{e};
        seen[e] = 1;
        while (!stack.empty()) {
            const int cur = stack.back();
            stack.pop_back();
            for (int nb : neighbors[cur])
                if (in_d(nb) && !seen[nb]) {
                    seen[nb] = 1;
                    stack.push_back(nb);
                }
        }
    }
    return r;
}

SweepResult sweep(const Shape& shape, double beta, const std::vector<double>& deltas, const SweepOptions& options) {
    if (deltas.empty()) throw InvalidArgument("sweep: no deltas given");
    for (std::size_t i = 0; i < deltas.size(); ++i) {
        if (!(deltas[i] > 0.0)) throw InvalidArgument("sweep: deltas must be > 0");
        if (i > 0 && !(deltas[i] < deltas[i - 1])) throw InvalidArgument("sweep: deltas must be strictly decreasing");
    }
    if (!options.mesh) shape.validate();
    if (!(options.h_factor > 0.0)) throw InvalidArgument("sweep: h_factor must be > 0");
    const int n = options.mesh ? options.mesh->dim : shape.dim();
    const double omega = options.mesh ? options.mesh->domain_measure : shape.measure();
    if (!(deltas.front() < beta * omega / (1.0 + beta)))
        throw InvalidArgument("sweep: deltas must lie below beta|Omega|/(1+beta)");

    SweepResult out;
    for (double delta : deltas) {
        try {
            GeneratedMesh gm;
            if (options.mesh) {
                gm.mesh = *options.mesh;
                gm.geometry = estimate_boundary_geometry(gm.mesh);
            } else {
                gm = generate_mesh(shape, options.h ? *options.h : options.h_factor * std::pow(delta, options.h_exponent.value_or(1.0 / n)));
            }
            const std::vector<Design> seeds = options.seeds ? seed_designs(gm.mesh, beta, delta, *options.seeds)
                                                            : default_seeds(gm.mesh, beta, delta);
            OptimizeResult res = optimize(gm.mesh, beta, delta, seeds, options.optimize);
            out.records.push_back(measure(gm.mesh, res.best, delta, options.annulus_eps));
            if (options.keep_states) out.states.push_back({delta, std::move(gm), std::move(res.best)});
        } catch (const Error& e) {
            out.failures.push_back({delta, e.what()});
        }
    }
    return out;
}

DecayReport decay_report(const Mesh& mesh, const EigenResult& eigen, double delta, int max_j) {
    if (!(delta > 0.0)) throw InvalidArgument("decay_report: delta must be > 0");
    if (max_j < 0) throw InvalidArgument("decay_report: max_j must be >= 0");
    if (eigen.u.size() != mesh.vertex_count()) throw InvalidArgument("decay_report: eigenvector does not match mesh");
    const Eigen::VectorXd& u = eigen.u;
    const double scale = std::sqrt(delta / l2_norm_squared(mesh, u));
    const Point p = mesh.vertices[argmax_node(u)];
    const double unit = std::pow(delta, 1.0 / mesh.dim);

    std::vector<double> d(mesh.vertex_count());
    for (int i = 0; i < mesh.vertex_count(); ++i) d[i] = dist(mesh.vertices[i], p);

    DecayReport rep;
    for (int j = 0; j <= max_j; ++j) {
        const double radius = j * unit;
        double m = -1.0;
        for (int i = 0; i < mesh.vertex_count(); ++i)
            if (d[i] >= radius) m = std::max(m, u[i]);
        if (m < 0.0) break;
        rep.rows.push_back({j, radius, m * scale});
    }

    // Slope of log value against j over j >= 1.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int cnt = 0;
    for (const auto& row : rep.rows) {
        if (row.j < 1 || !(row.value > 0.0)) continue;
        const double y = std::log(row.value);
        sx += row.j;
        sy += y;
        sxx += double(row.j) * row.j;
        sxy += row.j * y;
        ++cnt;
    }
    if (cnt >= 2) rep.slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
    return rep;
}

double loglog_slope(const std::vector<SweepRecord>& records, int last) {
    if (last < 2 || static_cast<int>(records.size()) < last)
        throw InvalidArgument("loglog_slope: need at least `last` >= 2 records");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (auto it = records.end() - last; it != records.end(); ++it) {
        const double x = std::log(it->delta), y = std::log(it->od_value);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (last * sxy - sx * sy) / (last * sxx - sx * sx);
}

}  // namespace eigendesign
