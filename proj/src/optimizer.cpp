#include "eigendesign/optimizer.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <numeric>
#include <optional>
#include <random>
#include <thread>
#include <unordered_map>

#include "eigendesign/error.hpp"

namespace eigendesign {

namespace {

constexpr double kSnap = 1e-12;

void check_delta(const Mesh& mesh, double beta, double delta) {
    if (!(beta > 0.0)) throw InvalidArgument("optimizer: beta must be > 0");
    if (!(delta > 0.0) || !(delta < admissible_delta(mesh, beta)))
        throw InvalidArgument("optimizer: delta must lie in (0, beta|Omega|/(1+beta))");
}

std::vector<int> by_distance(const Mesh& mesh, const Point& p) {
    std::vector<double> d(mesh.element_count());
    for (int e = 0; e < mesh.element_count(); ++e) {
        const Point c = mesh.centroid(e);
        d[e] = std::hypot(c[0] - p[0], c[1] - p[1]);
    }
    std::vector<int> order(mesh.element_count());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return d[a] < d[b]; });
    return order;
}

// Boundary points at equal arc-length spacing along the loop through the
// vertex of largest x.
std::vector<Point> boundary_points(const Mesh& mesh, int n) {
    if (mesh.dim == 1) {
        const Point a = mesh.vertices[mesh.boundary_edges[0][0]];
        const Point b = mesh.vertices[mesh.boundary_edges[1][0]];
        std::vector<Point> pts{a[0] <= b[0] ? a : b, a[0] <= b[0] ? b : a};
        pts.resize(std::min<std::size_t>(pts.size(), n));
        return pts;
    }
    std::unordered_map<int, int> next;
    for (const auto& be : mesh.boundary_edges) next[be[0]] = be[1];
    int start = mesh.boundary_vertices.front();
    for (int v : mesh.boundary_vertices) {
        const Point& p = mesh.vertices[v];
        const Point& s = mesh.vertices[start];
        if (p[0] > s[0] || (p[0] == s[0] && p[1] < s[1])) start = v;
    }
    std::vector<int> loop{start};
    for (int v = next.at(start); v != start; v = next.at(v)) loop.push_back(v);
    std::vector<double> arc{0.0};
    for (std::size_t i = 0; i < loop.size(); ++i) {
        const Point& a = mesh.vertices[loop[i]];
        const Point& b = mesh.vertices[loop[(i + 1) % loop.size()]];
        arc.push_back(arc.back() + std::hypot(b[0] - a[0], b[1] - a[1]));
    }
    std::vector<Point> pts;
    for (int k = 0; k < n; ++k) {
        const double s = arc.back() * k / n;
        const std::size_t i = std::upper_bound(arc.begin(), arc.end(), s) - arc.begin() - 1;
        const Point& a = mesh.vertices[loop[i]];
        const Point& b = mesh.vertices[loop[(i + 1) % loop.size()]];
        const double t = arc[i + 1] > arc[i] ? (s - arc[i]) / (arc[i + 1] - arc[i]) : 0.0;
        pts.push_back({a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])});
    }
    return pts;
}

OptState run_seed(PrincipalSolver& solver, double beta, double delta, const Design& seed, int seed_id,
                  const OptimizeOptions& options) {
    const Mesh& mesh = solver.mesh();
    OptState st;
    st.seed_id = seed_id;
    st.design = seed;
    st.eigen = solver.solve(seed);
    // The quadrature picked for the seed stays valid as λ decreases; keeping
    // it makes every step compare like with like.
    const MassKind mass = st.eigen.mass;
    st.lambda_history.push_back(st.eigen.lambda);
    for (int it = 1; it <= options.max_iter; ++it) {
        BathtubResult next = bathtub_from_values(mesh, beta, delta, solver.element_mean_square(st.eigen.u, mass));
        const double change = st.design.symmetric_difference(next.design, mesh);
        // The current u has a Rayleigh quotient no larger than λ for the new
        // design, so the old λ is an upper bound for the new one.
        EigenResult eig =
            change == 0.0 ? st.eigen : solver.solve(next.design, &st.eigen.u, st.eigen.lambda, mass);
        const double decrease = st.eigen.lambda - eig.lambda;
        st.design = std::move(next.design);
        st.eigen = std::move(eig);
        st.iteration = it;
        st.lambda_history.push_back(st.eigen.lambda);
        st.sym_diff_history.push_back(change);
        if (decrease < options.tol * st.eigen.lambda && change < options.tol * mesh.domain_measure) {
            st.converged = true;
            break;
        }
    }
    return st;
}

}  // namespace

Design fill_design(const Mesh& mesh, double beta, double delta, const std::vector<int>& order) {
    std::vector<double> theta(mesh.element_count(), 0.0);
    double acc = 0.0;
    for (int e : order) {
        const double remaining = delta - acc;
        if (remaining <= kSnap * mesh.element_measure[e]) break;
        double t = remaining / mesh.element_measure[e];
        if (t >= 1.0 - kSnap) t = 1.0;
        theta[e] = t;
        acc += t * mesh.element_measure[e];
        if (t < 1.0) break;
    }
    if (acc < delta * (1.0 - 1e-9)) throw InvalidArgument("optimizer: element order does not reach delta");
    return Design::from_fractions(mesh, beta, theta);
}

BathtubResult bathtub_from_values(const Mesh& mesh, double beta, double delta, const std::vector<double>& f) {
    check_delta(mesh, beta, delta);
    if (static_cast<int>(f.size()) != mesh.element_count())
        throw InvalidArgument("optimizer: one element value per element required");
    std::vector<int> order(mesh.element_count());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return f[a] > f[b]; });
    BathtubResult out;
    out.design = fill_design(mesh, beta, delta, order);
    // The cut is the last element that received any weight.
    for (int e : order) {
        if (out.design.fraction(e) == 0.0) break;
        out.threshold = f[e];
    }
    return out;
}

BathtubResult bathtub_update(const Eigen::VectorXd& u, const Mesh& mesh, double beta, double delta, MassKind kind) {
    if (u.size() != mesh.vertex_count()) throw InvalidArgument("optimizer: one nodal value per vertex required");
    if (!(u.minCoeff() >= 0.0)) throw InvalidArgument("optimizer: u must be nonnegative");
    if (!(u.maxCoeff() > u.minCoeff())) throw InvalidArgument("optimizer: u must not be constant");
    return bathtub_from_values(mesh, beta, delta, element_mean_square(mesh, u, kind));
}

int worker_count(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("EIGENDESIGN_THREADS"); env && *env) {
        int n = 0;
        const auto [ptr, ec] = std::from_chars(env, env + std::strlen(env), n);
        if (ec != std::errc() || *ptr != '\0' || n < 1)
            throw InvalidArgument("EIGENDESIGN_THREADS must be a positive integer");
        return n;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

OptimizeResult optimize(const Mesh& mesh, double beta, double delta, const std::vector<Design>& seeds,
                        const OptimizeOptions& options) {
    check_delta(mesh, beta, delta);
    if (seeds.empty()) throw InvalidArgument("optimizer: at least one seed required");
    if (!(options.tol > 0.0) || options.max_iter < 1) throw InvalidArgument("optimizer: tol > 0 and max_iter >= 1 required");
    for (const Design& s : seeds) {
        s.validate(mesh);
        if (s.beta != beta) throw InvalidArgument("optimizer: seed beta differs");
        if (std::abs(s.delta - delta) > 1e-12 * std::max(1.0, mesh.domain_measure))
            throw InvalidArgument("optimizer: seed measure differs from delta");
    }

    const int n = static_cast<int>(seeds.size());
    std::vector<std::optional<OptState>> states(n);
    std::vector<std::string> errors(n);
    std::atomic<int> cursor{0};
    auto work = [&] {
        std::optional<PrincipalSolver> solver;
        for (int i = cursor++; i < n; i = cursor++) {
            try {
                if (!solver) solver.emplace(mesh, options.solver);
                states[i] = run_seed(*solver, beta, delta, seeds[i], i, options);
            } catch (const Error& e) {
                errors[i] = e.what();
            }
        }
    };
    const int workers = std::min(worker_count(options.threads), n);
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (int t = 0; t < workers; ++t) pool.emplace_back(work);
    }

    OptimizeResult out;
    for (int i = 0; i < n; ++i) {
        if (states[i])
            out.runs.push_back(std::move(*states[i]));
        else
            out.failures.push_back({i, errors[i]});
    }
    if (out.runs.empty()) throw SolverError("optimizer: every seed failed; first error: " + out.failures.front().message);

    std::vector<int> rank(out.runs.size());
    std::iota(rank.begin(), rank.end(), 0);
    std::stable_sort(rank.begin(), rank.end(), [&](int a, int b) {
        const auto& x = out.runs[a];
        const auto& y = out.runs[b];
        return x.eigen.lambda != y.eigen.lambda ? x.eigen.lambda < y.eigen.lambda : x.seed_id < y.seed_id;
    });
    out.best = out.runs[rank.front()];
    for (int i : rank) {
        const OptState& s = out.runs[i];
        if (s.eigen.lambda > out.best.eigen.lambda * (1.0 + options.tol)) break;
        const bool distinct = std::all_of(out.co_optimal.begin(), out.co_optimal.end(), [&](int j) {
            return out.runs[j].design.symmetric_difference(s.design, mesh) >= options.tol * mesh.domain_measure;
        });
        if (distinct) out.co_optimal.push_back(i);
    }
    return out;
}

std::vector<Design> seed_designs(const Mesh& mesh, double beta, double delta, const SeedStrategy& strategy) {
    check_delta(mesh, beta, delta);
    if (strategy.count < 1) throw InvalidArgument("optimizer: seed count must be >= 1");
    std::vector<Design> out;
    switch (strategy.kind) {
        case SeedStrategy::Kind::boundary_caps:
            for (const Point& p : boundary_points(mesh, strategy.count))
                out.push_back(fill_design(mesh, beta, delta, by_distance(mesh, p)));
            break;
        case SeedStrategy::Kind::centered: {
            Point c{0.0, 0.0};
            for (int e = 0; e < mesh.element_count(); ++e) {
                const Point g = mesh.centroid(e);
                c[0] += mesh.element_measure[e] * g[0];
                c[1] += mesh.element_measure[e] * g[1];
            }
            c[0] /= mesh.domain_measure;
            c[1] /= mesh.domain_measure;
            out.push_back(fill_design(mesh, beta, delta, by_distance(mesh, c)));
            break;
        }
        case SeedStrategy::Kind::random: {
            // Eden growth: a random element, then uniformly random frontier
            // elements until the measure is reached.
            std::mt19937_64 rng(strategy.rng_seed);
            const auto neighbors = element_neighbors(mesh);
            for (int k = 0; k < strategy.count; ++k) {
                std::vector<char> seen(mesh.element_count(), 0);
                std::vector<int> order, frontier{static_cast<int>(rng() % mesh.element_count())};
                seen[frontier[0]] = 1;
                double acc = 0.0;
                while (acc < delta && !frontier.empty()) {
                    const std::size_t pick = rng() % frontier.size();
                    const int e = frontier[pick];
                    frontier[pick] = frontier.back();
                    frontier.pop_back();
                    order.push_back(e);
                    acc += mesh.element_measure[e];
                    for (int f : neighbors[e])
                        if (!seen[f]) {
                            seen[f] = 1;
                            frontier.push_back(f);
                        }
                }
                out.push_back(fill_design(mesh, beta, delta, order));
            }
            break;
        }
    }
    return out;
}

std::vector<Design> default_seeds(const Mesh& mesh, double beta, double delta) {
    std::vector<Design> seeds = seed_designs(mesh, beta, delta, SeedStrategy::boundary_caps(8));
    for (Design& d : seed_designs(mesh, beta, delta, SeedStrategy::centered())) seeds.push_back(std::move(d));
    return seeds;
}

}  // namespace eigendesign
