#include <cmath>
#include <numbers>
#include <random>

#include <boost/math/tools/roots.hpp>

#include "doctest.h"
#include "eigendesign/asymptotics.hpp"
#include "eigendesign/error.hpp"

using namespace eigendesign;

namespace {

constexpr double kPi = std::numbers::pi;

double interval_oracle(double delta, double beta) {
    auto f = [&](double s) { return std::tan(s * delta) - std::sqrt(beta) * std::tanh(std::sqrt(beta) * s * (1.0 - delta)); };
    boost::math::tools::eps_tolerance<double> tol(52);
    std::uintmax_t iters = 200;
    const auto [a, b] = boost::math::tools::toms748_solve(f, 1e-9, (kPi / 2 - 1e-12) / delta, tol, iters);
    const double s = 0.5 * (a + b);
    return s * s;
}

// Plug δ(r) and ν(r), truncated after the linear term, into the composed law.
double substitution_defect(const ExpansionPair& p, int n, double r) {
    const double delta = p.a * std::pow(r, n) * (1.0 - p.b * r);
    const double nu = p.c * std::pow(r, -2.0) * (1.0 - p.d * r);
    const auto law = compose_expansions(p, n);
    const double pred = law.coefficient * std::pow(delta, -2.0 / n) * (1.0 - law.correction * std::pow(delta, 1.0 / n));
    return std::abs(nu / pred - 1.0);
}

double fitted_order(const ExpansionPair& p, int n) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const int k = 6;
    for (int i = 0; i < k; ++i) {
        const double r = 0.02 * std::pow(0.5, i);
        const double x = std::log(r), y = std::log(substitution_defect(p, n, r));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (k * sxy - sx * sy) / (k * sxx - sx * sx);
}

}  // namespace

TEST_CASE("composition without first order terms") {
    const auto law = compose_expansions({0.3, 0.0, 2.0, 0.0}, 2);
    CHECK(law.correction == 0.0);
    CHECK(law.coefficient == doctest::Approx(2.0 * 0.3));
    CHECK_THROWS_AS(compose_expansions({0.0, 0.0, 1.0, 0.0}, 1), InvalidArgument);
    CHECK_THROWS_AS(compose_expansions({1.0, 0.0, -1.0, 0.0}, 1), InvalidArgument);
    CHECK_THROWS_AS(compose_expansions({1.0, 0.0, 1.0, 0.0}, 0), InvalidArgument);
}

TEST_CASE("half-ball competitor reproduces the curvature coefficient") {
    for (int n = 1; n <= 3; ++n) {
        for (double beta : {0.5, 1.0, 4.0}) {
            const auto sol = solve_limit({n, beta, 1.0});
            const auto k = limit_constants(sol);
            for (double H : {1.0, 0.5}) {
                const auto p = competitor_expansions(sol, k, H);
                const double alpha = (n - 1) * H;
                CHECK(2.0 * p.b / n + p.d == doctest::Approx(2.0 * alpha * k.gamma / k.grad_half).epsilon(1e-10).scale(1.0));
                const auto law = compose_expansions(p, n);
                CHECK(law.coefficient == doctest::Approx(std::pow(2.0, -2.0 / n) * sol.mu).epsilon(1e-14));
                CHECK(law.correction == doctest::Approx(k.big_gamma * H).epsilon(1e-10).scale(1.0));
            }
        }
    }
    auto sol = solve_limit({2, 1.0, 2.0});
    CHECK_THROWS_AS(competitor_expansions(sol, limit_constants(sol), 1.0), InvalidArgument);
}

TEST_CASE("composition agrees with direct substitution to second order") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> pos(0.2, 3.0), any(-2.0, 2.0);
    for (int t = 0; t < 100; ++t) {
        const int n = 1 + t % 3;
        const ExpansionPair p{pos(rng), any(rng), pos(rng), any(rng)};
        CHECK(substitution_defect(p, n, 0.02) < 0.1);
        CHECK(fitted_order(p, n) >= 1.9);
    }
}

TEST_CASE("predicted bound") {
    const LimitConfig c1{1, 1.0, 1.0};
    const auto k1 = limit_constants(solve_limit(c1));
    CHECK(predicted_bound(0.05, c1, k1, 1.0) == doctest::Approx(kPi * kPi / 16 / 0.0025).epsilon(1e-9));

    const LimitConfig c2{2, 1.0, 1.0};
    const auto sol2 = solve_limit(c2);
    const auto k2 = limit_constants(sol2);
    for (double delta : {0.1, 0.05, 0.01, 0.001}) {
        const double flat = predicted_bound(delta, c2, k2, 0.0);
        CHECK(flat == doctest::Approx(0.5 * sol2.mu / delta).epsilon(1e-9));
        CHECK(predicted_bound(delta, c2, k2, 1.0) < flat);
    }
    // The limit eigenvalue is taken at unit measure whatever config.mass says.
    CHECK(predicted_bound(0.01, {2, 1.0, 3.0}, k2, 0.0) == doctest::Approx(predicted_bound(0.01, c2, k2, 0.0)));
    CHECK_THROWS_AS(predicted_bound(0.01, c2, k2, 1e3), InvalidArgument);
    CHECK_THROWS_AS(predicted_bound(0.0, c2, k2, 1.0), InvalidArgument);
}

TEST_CASE("1D sweep approaches the limit coefficient") {
    SweepOptions opt;
    opt.h_factor = 1.25;
    opt.h_exponent = 2.0;
    const std::vector<double> deltas{0.08, 0.04, 0.02, 0.01};
    const auto res = sweep(Shape::interval(1.0), 1.0, deltas, opt);
    REQUIRE(res.failures.empty());
    REQUIRE(res.records.size() == deltas.size());
    double prev = 1.0;
    for (const auto& r : res.records) {
        // The discretization error is scale invariant: it depends on h/δ.
        const double exact = interval_oracle(r.delta, 1.0);
        CHECK(std::abs(r.od_value / exact - 1.0) < 0.01 * std::pow(r.h / r.delta, 2));
        const double err = std::abs(r.rescaled / (kPi * kPi / 16) - 1.0);
        CHECK(err < prev);
        prev = err;
        CHECK(r.connected_components == 1);
        CHECK(r.dist_boundary == 0.0);
        CHECK(r.boundary_contact == 1.0);
        CHECK(r.annulus_ok == std::vector<bool>{true, true});
        CHECK(r.converged);
        CHECK(r.min_over_D > 0.5);
    }
    CHECK(loglog_slope(res.records) == doctest::Approx(-2.0).epsilon(0.01));
}

TEST_CASE("1D decay profile follows the exterior closed form") {
    SweepOptions opt;
    opt.keep_states = true;
    const double delta = 0.02;
    const auto res = sweep(Shape::interval(1.0), 1.0, {delta}, opt);
    REQUIRE(res.states.size() == 1);
    const auto& st = res.states[0];
    const auto rep = decay_report(st.mesh.mesh, st.state.eigen, delta, 10);
    REQUIRE(rep.rows.size() == 11);
    CHECK(rep.rows[0].j == 0);

    // Design at an end, so distances from P are distances from that end.
    const double s = std::sqrt(st.state.eigen.lambda);
    auto profile = [&](double x) { return std::cosh(s * (1.0 - x)); };
    for (std::size_t j = 1; j + 1 < rep.rows.size(); ++j) {
        const double got = std::log(rep.rows[j + 1].value / rep.rows[j].value);
        const double want = std::log(profile((j + 1) * delta) / profile(j * delta));
        CHECK(got == doctest::Approx(want).epsilon(1e-3));
        CHECK(rep.rows[j + 1].value < rep.rows[j].value);
    }
    CHECK(rep.slope == doctest::Approx(-s * delta).epsilon(1e-3));
    // Rescaled, the rate is √(λδ²β) → √(π²/16).
    CHECK(rep.slope == doctest::Approx(-kPi / 4).epsilon(1e-3));
}

TEST_CASE("decay report normalization row") {
    const auto gm = generate_mesh(Shape::interval(1.0), 0.01);
    OptimizeOptions oo;
    oo.threads = 1;
    const double delta = 0.1;
    const auto res = optimize(gm.mesh, 1.0, delta, default_seeds(gm.mesh, 1.0, delta), oo);
    const auto rep = decay_report(gm.mesh, res.best.eigen, delta, 3);
    // u is max-normalized to 1; M_0 = δ^{1/2} / ‖u‖.
    double l2 = 0.0;
    const auto& u = res.best.eigen.u;
    for (int e = 0; e < gm.mesh.element_count(); ++e) {
        const double a = u[gm.mesh.elements[e][0]], b = u[gm.mesh.elements[e][1]];
        l2 += gm.mesh.element_measure[e] * (a * a + a * b + b * b) / 3.0;
    }
    CHECK(rep.rows[0].value == doctest::Approx(std::sqrt(delta / l2)).epsilon(1e-12));
    CHECK_THROWS_AS(decay_report(gm.mesh, res.best.eigen, 0.0), InvalidArgument);
    EigenResult bad;
    bad.u = Eigen::VectorXd::Ones(3);
    CHECK_THROWS_AS(decay_report(gm.mesh, bad, delta), InvalidArgument);
}

TEST_CASE("coarse disk sweep concentrates at the boundary") {
    SweepOptions opt;
    opt.h_factor = 1.0 / 6.0;
    const auto res = sweep(Shape::disk(1.0), 1.0, {0.1}, opt);
    REQUIRE(res.records.size() == 1);
    const auto& r = res.records[0];
    CHECK(r.dist_boundary < r.h);
    CHECK(r.connected_components == 1);
    CHECK(r.boundary_contact > 0.0);
    CHECK(r.rescaled == doctest::Approx(4.0).epsilon(0.2));
    CHECK(r.annulus_ok.back());
}

TEST_CASE("sweep records per-delta failures and validates its input") {
    SweepOptions opt;
    opt.h_factor = 1.0;
    opt.h_exponent = 1.0;
    // h = 0.3 is too coarse for the unit interval; δ = 0.1 still runs.
    const auto res = sweep(Shape::interval(1.0), 1.0, {0.3, 0.1}, opt);
    REQUIRE(res.failures.size() == 1);
    CHECK(res.failures[0].delta == 0.3);
    REQUIRE(res.records.size() == 1);
    CHECK(res.records[0].delta == 0.1);

    CHECK_THROWS_AS(sweep(Shape::interval(1.0), 1.0, {}), InvalidArgument);
    CHECK_THROWS_AS(sweep(Shape::interval(1.0), 1.0, {0.1, 0.1}), InvalidArgument);
    CHECK_THROWS_AS(sweep(Shape::interval(1.0), 1.0, {0.6, 0.1}), InvalidArgument);
    CHECK_THROWS_AS(loglog_slope(res.records, 3), InvalidArgument);
}

TEST_CASE("log-log slope of an exact power law") {
    std::vector<SweepRecord> recs;
    for (double d : {0.1, 0.05, 0.02, 0.01}) {
        SweepRecord r;
        r.delta = d;
        r.od_value = 3.0 * std::pow(d, -1.0);
        recs.push_back(r);
    }
    CHECK(loglog_slope(recs) == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(loglog_slope(recs, 4) == doctest::Approx(-1.0).epsilon(1e-12));
}
