#include <cmath>
#include <numbers>

#include "doctest.h"
#include "eigendesign/error.hpp"
#include "eigendesign/radial_limit.hpp"

using namespace eigendesign;
using std::numbers::pi;

// Reference values below were computed independently with mpmath (Bessel
// closed forms, 25 digits) and frozen here.

TEST_CASE("unit ball volumes") {
    CHECK(unit_ball_volume(0) == doctest::Approx(1.0));
    CHECK(unit_ball_volume(1) == doctest::Approx(2.0));
    CHECK(unit_ball_volume(2) == doctest::Approx(pi));
    CHECK(unit_ball_volume(3) == doctest::Approx(4.0 * pi / 3.0));
}

TEST_CASE("matching mismatch sign and root in 1D") {
    const LimitConfig cfg{1, 1.0, 1.0};
    // tan(√μ/2) = √β is the 1D matching condition.
    CHECK(std::abs(matching_mismatch(cfg, pi * pi / 4)) < 1e-10);
    CHECK(matching_mismatch(cfg, 1.0) < 0.0);
    CHECK(matching_mismatch(cfg, 1.0) == doctest::Approx(std::tan(0.5) - 1.0).epsilon(1e-10));
    CHECK(matching_mismatch(cfg, 1.0, ProfileMethod::bessel) ==
          doctest::Approx(std::tan(0.5) - 1.0).epsilon(1e-12));
    // First interior zero of cos(√μ r) at r = 1/2 is μ = π².
    CHECK_THROWS_AS(matching_mismatch(cfg, 1.01 * pi * pi), PastPrincipalBranch);
    CHECK_THROWS_AS(matching_mismatch(cfg, 1.01 * pi * pi, ProfileMethod::bessel), PastPrincipalBranch);
    CHECK_THROWS_AS(matching_mismatch(cfg, -1.0), InvalidArgument);
}

TEST_CASE("mismatch is increasing on the principal branch") {
    for (int dim : {1, 2, 3}) {
        const LimitConfig cfg{dim, 1.0, 1.0};
        const RadialSolution sol = solve_limit(cfg);
        double prev = -1e300;
        // Scanner bracket [μ/1.2, μ·1.2] and beyond, up to the interior cap.
        for (double t = 1 / 1.2; t < 3.0; t += 0.02) {
            double v = 0.0;
            try {
                v = matching_mismatch(cfg, t * sol.mu);
            } catch (const PastPrincipalBranch&) {
                break;
            }
            CHECK(v > prev);
            prev = v;
        }
    }
}

TEST_CASE("solve_limit closed forms in 1D") {
    CHECK(solve_limit({1, 1.0, 1.0}).mu == doctest::Approx(pi * pi / 4).epsilon(1e-12));
    CHECK(solve_limit({1, 3.0, 1.0}).mu == doctest::Approx(4 * pi * pi / 9).epsilon(1e-12));
    CHECK(solve_limit({1, 1.0, 2.0}).mu == doctest::Approx(pi * pi / 16).epsilon(1e-12));
    CHECK(solve_limit({1, 1.0, 1.0}, ProfileMethod::bessel).mu ==
          doctest::Approx(pi * pi / 4).epsilon(1e-12));
}

TEST_CASE("solve_limit agrees with Bessel reference values") {
    struct Case {
        int dim;
        double beta;
        double mu;
    };
    const Case cases[] = {{2, 0.5, 6.508761726878853721}, {2, 1.0, 8.190277132365611354},
                          {2, 4.0, 11.82827385983444801}, {3, 0.5, 12.42040416644520951},
                          {3, 1.0, 14.42606921968995942}, {3, 4.0, 18.63498555025013175}};
    for (const auto& c : cases) {
        const LimitConfig cfg{c.dim, c.beta, 1.0};
        const RadialSolution shoot = solve_limit(cfg, ProfileMethod::shooting);
        const RadialSolution bessel = solve_limit(cfg, ProfileMethod::bessel);
        CHECK(shoot.mu == doctest::Approx(c.mu).epsilon(1e-10));
        CHECK(bessel.mu == doctest::Approx(c.mu).epsilon(1e-10));
        CHECK(std::abs(matching_mismatch(cfg, shoot.mu)) < 1e-10);
        CHECK(shoot.rbar == doctest::Approx(std::pow(unit_ball_volume(c.dim), -1.0 / c.dim)));
    }
}

TEST_CASE("scaling law in the mass parameter") {
    for (int dim : {1, 2, 3}) {
        const double mu1 = solve_limit({dim, 1.5, 0.7}).mu;
        const double mu2 = solve_limit({dim, 1.5, 3.1}).mu;
        CHECK(std::abs(mu2 / mu1 - std::pow(3.1 / 0.7, -2.0 / dim)) < 1e-9);
    }
}

TEST_CASE("invalid configurations") {
    CHECK_THROWS_AS(solve_limit({0, 1.0, 1.0}), InvalidArgument);
    CHECK_THROWS_AS(solve_limit({1, -1.0, 1.0}), InvalidArgument);
    CHECK_THROWS_AS(solve_limit({1, 1.0, 0.0}), InvalidArgument);
}

TEST_CASE("profile values") {
    const RadialSolution sol = solve_limit({1, 1.0, 1.0});
    const ProfileValue origin = eval_profile(sol, 0.0);
    CHECK(origin.value == doctest::Approx(1.0));
    CHECK(origin.derivative == doctest::Approx(0.0));
    const ProfileValue half = eval_profile(sol, 0.5);
    CHECK(half.value == doctest::Approx(std::cos(pi / 4)).epsilon(1e-10));
    CHECK(half.derivative == doctest::Approx(-(pi / 2) * std::sin(pi / 4)).epsilon(1e-10));
    // Exterior is exp(-√μ (r - 1/2)) w(1/2) for β = 1.
    const ProfileValue out = eval_profile(sol, 1.3);
    CHECK(out.value == doctest::Approx(std::cos(pi / 4) * std::exp(-(pi / 2) * 0.8)).epsilon(1e-10));

    for (int dim : {2, 3}) {
        const RadialSolution s = solve_limit({dim, 1.0, 1.0});
        const ProfileValue o = eval_profile(s, 0.0);
        CHECK(o.value == doctest::Approx(1.0));
        CHECK(std::abs(o.derivative) < 1e-12);
    }
}

TEST_CASE("profile is positive, decreasing and C1 at the wall") {
    for (int dim : {1, 2, 3}) {
        for (double beta : {0.5, 4.0}) {
            const RadialSolution sol = solve_limit({dim, beta, 1.0});
            for (double r = 0.01; r < 6 * sol.rbar; r += 0.07 * sol.rbar) {
                const ProfileValue p = eval_profile(sol, r);
                CHECK(p.value > 0.0);
                CHECK(p.derivative <= 0.0);
            }
            const ProfileValue below = eval_profile(sol, sol.rbar * (1 - 1e-9));
            const ProfileValue above = eval_profile(sol, sol.rbar * (1 + 1e-9));
            CHECK(below.value == doctest::Approx(above.value).epsilon(1e-7));
            CHECK(below.derivative == doctest::Approx(above.derivative).epsilon(1e-7));
        }
    }
}

TEST_CASE("shooting and Bessel realizations agree pointwise") {
    for (int dim : {1, 2, 3}) {
        const RadialSolution sol = solve_limit({dim, 1.0, 1.0});
        for (double r = 0.0; r <= 5 * sol.rbar; r += 0.13 * sol.rbar) {
            const ProfileValue a = eval_profile(sol, r, ProfileMethod::shooting);
            const ProfileValue b = eval_profile(sol, r, ProfileMethod::bessel);
            CHECK(std::abs(a.value - b.value) < 1e-8);
            CHECK(std::abs(a.derivative - b.derivative) < 1e-8);
        }
    }
}

TEST_CASE("exponential tail law") {
    for (int dim : {1, 2, 3}) {
        const RadialSolution sol = solve_limit({dim, 1.0, 1.0});
        const double s = sol.decay_rate();
        auto compensated = [&](double r) {
            return std::log(eval_profile(sol, r).value) + s * r + 0.5 * (dim - 1) * std::log(r);
        };
        const double a = compensated(10 * sol.rbar);
        const double b = compensated(20 * sol.rbar);
        CHECK(std::abs(std::exp(a - b) - 1.0) < 0.1);
        // Differences behave like C/r.
        const double d1 = std::abs(compensated(15 * sol.rbar) - compensated(30 * sol.rbar));
        const double d2 = std::abs(compensated(30 * sol.rbar) - compensated(60 * sol.rbar));
        CHECK(d2 <= 0.6 * d1 + 1e-9);
    }
}

TEST_CASE("limit constants in 1D match closed forms") {
    const RadialSolution sol = solve_limit({1, 1.0, 1.0});
    const LimitConstants c = limit_constants(sol);
    CHECK(c.big_gamma == 0.0);
    CHECK(c.grad_half == doctest::Approx(pi * pi / 16).epsilon(1e-9));
    CHECK(c.mass_half == doctest::Approx(0.25).epsilon(1e-9));
    CHECK(c.gamma == doctest::Approx(0.2021062843835106142).epsilon(1e-9));
    CHECK(c.gamma1 == doctest::Approx(-0.03882118364233777144).epsilon(1e-9));
    CHECK(c.wall_value == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
}

TEST_CASE("limit constants in 2D and 3D match references") {
    const LimitConstants c2 = limit_constants(solve_limit({2, 1.0, 1.0}));
    CHECK(c2.grad_half == doctest::Approx(1.636866944906073876).epsilon(1e-8));
    CHECK(c2.mass_half == doctest::Approx(0.1998548911657272428).epsilon(1e-8));
    CHECK(c2.gamma == doctest::Approx(0.2000306962423802687).epsilon(1e-8));
    CHECK(c2.gamma1 == doctest::Approx(0.02343220698225409987).epsilon(1e-7));
    CHECK(c2.big_gamma == doctest::Approx(0.3456433944093599491).epsilon(1e-8));
    CHECK(c2.wall_value == doctest::Approx(0.4470513294530363465).epsilon(1e-10));

    const LimitConstants c3 = limit_constants(solve_limit({3, 1.0, 1.0}));
    CHECK(c3.grad_half == doctest::Approx(1.948888544860376980).epsilon(1e-8));
    CHECK(c3.gamma == doctest::Approx(0.1437574426702472387).epsilon(1e-8));
    CHECK(c3.big_gamma == doctest::Approx(0.3717463034547745780).epsilon(1e-8));
}

TEST_CASE("gamma equals the normal-derivative moment") {
    for (int dim : {1, 2, 3}) {
        const RadialSolution sol = solve_limit({dim, 2.0, 1.0});
        const LimitConstants c = limit_constants(sol);
        CHECK(c.gamma > 0.0);
        CHECK(normal_derivative_moment(sol) == doctest::Approx(c.gamma).epsilon(1e-6));
        CHECK(c.grad_half / c.mass_half == doctest::Approx(sol.mu).epsilon(1e-6));
        if (dim > 1) CHECK(c.big_gamma > 0.0);
    }
}

TEST_CASE("integral identities hold on the solved profile") {
    for (int dim : {1, 2}) {
        for (ProfileMethod method : {ProfileMethod::shooting, ProfileMethod::bessel}) {
            const auto res = check_identities(solve_limit({dim, 1.0, 1.0}, method));
            for (const auto& [name, value] : res) {
                INFO(name);
                CHECK(value < 1e-6);
            }
        }
    }
    // Non-unit mass: the identities are written with the actual wall radius.
    for (const auto& [name, value] : check_identities(solve_limit({2, 1.0, 2.5}))) {
        INFO(name);
        CHECK(value < 1e-6);
    }
}

TEST_CASE("identities detect a perturbed eigenvalue") {
    for (int dim : {1, 2, 3}) {
        const RadialSolution sol = solve_limit({dim, 1.0, 1.0});
        const LimitConstants c = limit_constants(sol);
        RadialSolution perturbed = sol;
        perturbed.mu *= 1.01;
        // Same profile, wrong eigenvalue coefficient.
        const auto fixed_profile = identity_residuals(perturbed, c);
        // For N = 3 the technical identity is homogeneous in μ.
        if (dim < 3) CHECK(fixed_profile.at("technical") > 1e-3);
        CHECK(fixed_profile.at("eigen") > 1e-3);
        // Profile regenerated from the wrong eigenvalue: no longer C1 at R̄.
        const auto regenerated = check_identities(perturbed);
        CHECK(regenerated.at("c1_derivative") > 1e-3);
        CHECK(regenerated.at("pohozaev") > 1e-3);
        CHECK(regenerated.at("eigen") > 1e-3);
    }
}
