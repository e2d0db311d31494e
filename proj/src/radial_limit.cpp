#include "eigendesign/radial_limit.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/numeric/odeint.hpp>

#include "eigendesign/error.hpp"

namespace eigendesign {

namespace odeint = boost::numeric::odeint;

namespace {

using State = std::array<double, 2>;

constexpr double kOdeAbsTol = 1e-14;
constexpr double kOdeRelTol = 1e-13;
constexpr double kTruncationWidth = 40.0;
constexpr double kMismatchTol = 1e-12;

double bessel_order(int dim) { return 0.5 * dim - 1.0; }

// Integrates the 2-state system from t0 to t1 with an adaptive Dormand-Prince
// stepper; the observer sees every accepted step.
template <class System, class Observer>
State integrate(System sys, State x, double t0, double t1, Observer obs) {
    auto stepper = odeint::make_controlled(kOdeAbsTol, kOdeRelTol,
                                           odeint::runge_kutta_dopri5<State>());
    const double dt = (t1 - t0) / 64.0;
    odeint::integrate_adaptive(stepper, sys, x, t0, t1, dt, obs);
    return x;
}

template <class System>
State integrate(System sys, State x, double t0, double t1) {
    return integrate(sys, x, t0, t1, [](const State&, double) {});
}

// Regular solution of w'' + (N-1)/r w' + μ w = 0, w(0) = 1, integrated to r.
// Throws PastPrincipalBranch if w reaches zero on the way.
ProfileValue shoot_interior(int dim, double mu, double r) {
    const double n = dim;
    const double r0 = std::min(r, 1e-4 / std::sqrt(mu));
    // Taylor start away from the coordinate singularity.
    State x{1.0 - mu * r0 * r0 / (2 * n) + mu * mu * std::pow(r0, 4) / (8 * n * (n + 2)),
            -mu * r0 / n + mu * mu * std::pow(r0, 3) / (2 * n * (n + 2))};
    if (r <= r0) return {x[0], x[1]};
    auto sys = [dim, mu](const State& s, State& ds, double t) {
        ds[0] = s[1];
        ds[1] = -(dim - 1) / t * s[1] - mu * s[0];
    };
    bool vanished = false;
    x = integrate(sys, x, r0, r, [&](const State& s, double) {
        if (s[0] <= 0.0) vanished = true;
    });
    if (vanished || x[0] <= 0.0) {
        std::ostringstream os;
        os << "radial_limit: mu_trial past principal branch (interior profile vanishes before r="
           << r << " at mu=" << mu << ")";
        throw PastPrincipalBranch(os.str());
    }
    return {x[0], x[1]};
}

// Log-derivative q = w'/w of the decaying exterior solution, from the Riccati
// equation q' = μβ - q^2 - (N-1) q / r integrated inward from far away.
double exterior_log_derivative(int dim, double decay, double r) {
    const double start = r + kTruncationWidth / decay;
    auto sys = [dim, decay](const State& s, State& ds, double t) {
        ds[0] = decay * decay - s[0] * s[0] - (dim - 1) / t * s[0];
        ds[1] = 0.0;
    };
    State x{-decay - (dim - 1) / (2.0 * start), 0.0};
    if (dim == 1) return -decay;
    x = integrate(sys, x, start, r);
    return x[0];
}

// Exterior profile w(r) / w(rbar) and its log-derivative at r >= rbar.
std::pair<double, double> shoot_exterior(int dim, double decay, double rbar, double r) {
    if (dim == 1) return {std::exp(-decay * (r - rbar)), -decay};
    const double q_r = exterior_log_derivative(dim, decay, r);
    if (r == rbar) return {1.0, q_r};
    // Accumulate ∫ q from r inward to rbar.
    auto sys = [dim, decay](const State& s, State& ds, double t) {
        ds[0] = decay * decay - s[0] * s[0] - (dim - 1) / t * s[0];
        ds[1] = s[0];
    };
    State x = integrate(sys, State{q_r, 0.0}, r, rbar);
    // x[1] = ∫_r^rbar q = -∫_rbar^r q.
    return {std::exp(-x[1]), q_r};
}

double first_bessel_zero(double nu) {
    if (nu == -0.5) return std::numbers::pi / 2;
    double a = 1e-3;
    double b = a;
    while (std::cyl_bessel_j(nu, b) > 0.0) {
        a = b;
        b += 0.05;
    }
    for (int i = 0; i < 200 && b - a > 1e-15 * b; ++i) {
        const double m = 0.5 * (a + b);
        (std::cyl_bessel_j(nu, m) > 0.0 ? a : b) = m;
    }
    return 0.5 * (a + b);
}

// x^{-ν} J_ν(x) scaled so that it equals 1 at x = 0, and its x-derivative.
std::pair<double, double> normalized_bessel_j(int dim, double x) {
    if (dim == 1) return {std::cos(x), -std::sin(x)};
    const double nu = bessel_order(dim);
    if (x < 1e-6) {
        return {1.0 - x * x / (4 * (nu + 1)), -x / (2 * (nu + 1))};
    }
    const double scale = std::tgamma(nu + 1) * std::pow(2.0 / x, nu);
    return {scale * std::cyl_bessel_j(nu, x), -scale * std::cyl_bessel_j(nu + 1, x)};
}

// Ratio K_{ν+1}/K_ν, safe for the half-integer order of dim = 1.
double bessel_k_ratio(double nu, double x) {
    if (nu == -0.5) return 1.0;
    return std::cyl_bessel_k(nu + 1, x) / std::cyl_bessel_k(nu, x);
}

double bessel_interior_decay_rate(int dim, double mu, double rbar) {
    const double x = std::sqrt(mu) * rbar;
    if (x >= first_bessel_zero(bessel_order(dim))) {
        std::ostringstream os;
        os << "radial_limit: mu_trial past principal branch (√μ·R̄=" << x
           << " beyond the first Bessel zero)";
        throw PastPrincipalBranch(os.str());
    }
    const auto [w, dw] = normalized_bessel_j(dim, x);
    return -std::sqrt(mu) * dw / w;
}

double unit_radius(int dim) { return std::pow(unit_ball_volume(dim), -1.0 / dim); }

ProfileValue interior_value(const RadialSolution& sol, double r, ProfileMethod method) {
    if (method == ProfileMethod::shooting) return shoot_interior(sol.config.dim, sol.mu, r);
    const double k = std::sqrt(sol.mu);
    const auto [w, dw] = normalized_bessel_j(sol.config.dim, k * r);
    return {w, k * dw};
}

ProfileValue exterior_value(const RadialSolution& sol, double r, ProfileMethod method,
                            double wall) {
    const int dim = sol.config.dim;
    const double s = sol.decay_rate();
    if (method == ProfileMethod::shooting) {
        const auto [ratio, q] = shoot_exterior(dim, s, sol.rbar, r);
        return {wall * ratio, wall * ratio * q};
    }
    if (s * r > 700.0) return {0.0, 0.0};
    const double nu = bessel_order(dim);
    if (dim == 1) {
        const double e = std::exp(-s * (r - sol.rbar));
        return {wall * e, -s * wall * e};
    }
    const double v = wall * std::pow(r / sol.rbar, -nu) * std::cyl_bessel_k(nu, s * r) /
                     std::cyl_bessel_k(nu, s * sol.rbar);
    return {v, -s * v * bessel_k_ratio(nu, s * r)};
}

double wall_value(const RadialSolution& sol, ProfileMethod method) {
    return interior_value(sol, sol.rbar, method).value;
}

}  // namespace

double unit_ball_volume(int n) {
    if (n < 0) throw InvalidArgument("unit_ball_volume: negative dimension");
    return std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n + 1.0);
}

void LimitConfig::validate() const {
    if (dim < 1) throw InvalidArgument("radial_limit: dim must be >= 1");
    if (!(beta > 0.0) || !std::isfinite(beta)) throw InvalidArgument("radial_limit: beta must be > 0");
    if (!(mass > 0.0) || !std::isfinite(mass)) throw InvalidArgument("radial_limit: mass must be > 0");
}

double RadialSolution::decay_rate() const { return std::sqrt(mu * config.beta); }

double RadialSolution::truncation_radius() const { return rbar + kTruncationWidth / decay_rate(); }

double matching_mismatch(const LimitConfig& config, double mu_trial, ProfileMethod method) {
    config.validate();
    if (!(mu_trial > 0.0)) throw InvalidArgument("radial_limit: mu_trial must be > 0");
    const int dim = config.dim;
    const double rbar = std::pow(config.mass / unit_ball_volume(dim), 1.0 / dim);
    const double decay = std::sqrt(mu_trial * config.beta);
    double interior_rate = 0.0;
    double exterior_rate = 0.0;
    if (method == ProfileMethod::shooting) {
        const ProfileValue in = shoot_interior(dim, mu_trial, rbar);
        interior_rate = -in.derivative / in.value;
        exterior_rate = -exterior_log_derivative(dim, decay, rbar);
    } else {
        interior_rate = bessel_interior_decay_rate(dim, mu_trial, rbar);
        exterior_rate = decay * bessel_k_ratio(bessel_order(dim), decay * rbar);
    }
    return interior_rate - exterior_rate;
}

RadialSolution solve_limit(const LimitConfig& config, ProfileMethod method) {
    config.validate();
    LimitConfig unit = config;
    unit.mass = 1.0;
    const double rbar1 = unit_radius(config.dim);

    // Geometric scan from below until the mismatch turns positive; the cap
    // (first interior zero) is located by bisection when the scan overshoots it.
    auto f = [&](double mu) { return matching_mismatch(unit, mu, method); };
    double lo = 1e-2 / (rbar1 * rbar1);
    double f_lo = f(lo);
    if (!(f_lo < 0.0)) {
        std::ostringstream os;
        os << "radial_limit: bracketing failed, mismatch not negative at scan start mu=" << lo;
        throw SolverError(os.str());
    }
    double hi = 0.0;
    double f_hi = 0.0;
    double trial = lo;
    double past_cap = 0.0;
    for (int i = 0; i < 400; ++i) {
        trial = past_cap > 0.0 ? 0.5 * (lo + past_cap) : lo * 1.2;
        try {
            const double v = f(trial);
            if (v > 0.0) {
                hi = trial;
                f_hi = v;
                break;
            }
            lo = trial;
            f_lo = v;
        } catch (const PastPrincipalBranch&) {
            past_cap = trial;
        }
    }
    if (hi == 0.0) {
        std::ostringstream os;
        os << "radial_limit: bracketing failed on scanned interval (0, " << trial << "]";
        throw SolverError(os.str());
    }

    // Bisection to a narrow bracket, then safeguarded secant.
    double mu = 0.0;
    double f_mu = 0.0;
    auto check_order = [&](double v) {
        if (v < f_lo || v > f_hi) throw SolverError("radial_limit: mismatch not monotone in bracket");
    };
    while (hi - lo > 1e-6 * hi) {
        mu = 0.5 * (lo + hi);
        f_mu = f(mu);
        check_order(f_mu);
        if (f_mu < 0.0) {
            lo = mu;
            f_lo = f_mu;
        } else {
            hi = mu;
            f_hi = f_mu;
        }
    }
    for (int i = 0; i < 100; ++i) {
        mu = lo - f_lo * (hi - lo) / (f_hi - f_lo);
        if (!(mu > lo && mu < hi)) mu = 0.5 * (lo + hi);
        f_mu = f(mu);
        if (std::abs(f_mu) <= kMismatchTol || hi - lo <= 4e-16 * hi) break;
        check_order(f_mu);
        if (f_mu < 0.0) {
            lo = mu;
            f_lo = f_mu;
        } else {
            hi = mu;
            f_hi = f_mu;
        }
    }
    if (std::abs(f_mu) > 1e-10) {
        std::ostringstream os;
        os << "radial_limit: root polish stalled with mismatch " << f_mu;
        throw SolverError(os.str());
    }

    // μ(B_k) = k^{-2/N} μ(B_1) and w_k(r) = w_1(k^{-1/N} r).
    RadialSolution sol;
    sol.config = config;
    sol.method = method;
    sol.mu = mu * std::pow(config.mass, -2.0 / config.dim);
    sol.rbar = rbar1 * std::pow(config.mass, 1.0 / config.dim);
    const double nu = bessel_order(config.dim);
    sol.interior_coeff = config.dim == 1 ? 1.0 : std::tgamma(nu + 1) * std::pow(2.0, nu);
    const double wall = wall_value(sol, method);
    const double s = sol.decay_rate();
    sol.exterior_coeff = config.dim == 1
                             ? wall * std::exp(s * sol.rbar) / std::sqrt(std::numbers::pi / (2 * s))
                             : wall * std::pow(sol.rbar, nu) / std::cyl_bessel_k(nu, s * sol.rbar);
    return sol;
}

ProfileValue eval_profile(const RadialSolution& sol, double r) { return eval_profile(sol, r, sol.method); }

ProfileValue eval_profile(const RadialSolution& sol, double r, ProfileMethod method) {
    if (!std::isfinite(r)) throw InvalidArgument("radial_limit: eval_profile needs finite r");
    r = std::abs(r);
    if (r <= sol.rbar) return interior_value(sol, r, method);
    return exterior_value(sol, r, method, wall_value(sol, method));
}

namespace {

// ∫_0^∞ w'^2 r^{N-1}, ∫ w'^2 r^N, ∫ m w^2 r^{N-1}, ∫ m w^2 r^N over [0, truncation radius].
struct RadialMoments {
    double grad0 = 0.0;
    double grad1 = 0.0;
    double mass0 = 0.0;
    double mass1 = 0.0;
    double error = 0.0;  // relative
};

using Moments6 = std::array<double, 6>;

// Moments accumulated alongside the radial ODE: the interior carries
// (w, w', integrals) outward; the exterior carries (q, L, integrals) inward
// from the truncation radius, with w = w(R_max) e^{L}.
RadialMoments shooting_moments(const RadialSolution& sol, double rel_tol) {
    const int dim = sol.config.dim;
    const double n = dim;
    const double mu = sol.mu;
    const double beta = sol.config.beta;
    const double s = sol.decay_rate();
    auto stepper = odeint::make_controlled(rel_tol * 1e-2, rel_tol,
                                           odeint::runge_kutta_dopri5<Moments6>());

    const double r0 = std::min(sol.rbar, 1e-4 / std::sqrt(mu));
    Moments6 in{1.0 - mu * r0 * r0 / (2 * n) + mu * mu * std::pow(r0, 4) / (8 * n * (n + 2)),
                -mu * r0 / n + mu * mu * std::pow(r0, 3) / (2 * n * (n + 2)),
                (mu / n) * (mu / n) * std::pow(r0, n + 2) / (n + 2),
                (mu / n) * (mu / n) * std::pow(r0, n + 3) / (n + 3),
                std::pow(r0, n) / n - mu / (n * (n + 2)) * std::pow(r0, n + 2),
                std::pow(r0, n + 1) / (n + 1) - mu / (n * (n + 3)) * std::pow(r0, n + 3)};
    auto interior = [dim, mu](const Moments6& x, Moments6& dx, double r) {
        const double w = x[0];
        const double dw = x[1];
        const double p = std::pow(r, dim - 1);
        dx[0] = dw;
        dx[1] = -(dim - 1) / r * dw - mu * w;
        dx[2] = dw * dw * p;
        dx[3] = dw * dw * p * r;
        dx[4] = w * w * p;
        dx[5] = w * w * p * r;
    };
    odeint::integrate_adaptive(stepper, interior, in, r0, sol.rbar, (sol.rbar - r0) / 64);
    if (!(in[0] > 0.0)) throw PastPrincipalBranch("radial_limit: interior profile vanishes before rbar");
    const double wall = in[0];

    const double end = sol.truncation_radius();
    Moments6 out{-s - (dim - 1) / (2.0 * end), 0.0, 0.0, 0.0, 0.0, 0.0};
    auto exterior = [dim, s](const Moments6& x, Moments6& dx, double r) {
        const double q = x[0];
        const double e = std::exp(2.0 * x[1]) * std::pow(r, dim - 1);
        dx[0] = s * s - q * q - (dim - 1) / r * q;
        dx[1] = q;
        dx[2] = q * q * e;
        dx[3] = q * q * e * r;
        dx[4] = e;
        dx[5] = e * r;
    };
    odeint::integrate_adaptive(stepper, exterior, out, end, sol.rbar, (sol.rbar - end) / 64);
    // Inward integration: out[k] = -∫_rbar^end; w(R_max)^2 = wall^2 e^{-2 L(rbar)}.
    const double scale = -wall * wall * std::exp(-2.0 * out[1]);

    RadialMoments m;
    m.grad0 = in[2] + scale * out[2];
    m.grad1 = in[3] + scale * out[3];
    m.mass0 = in[4] - beta * scale * out[4];
    m.mass1 = in[5] - beta * scale * out[5];
    return m;
}

RadialMoments bessel_moments(const RadialSolution& sol) {
    using boost::math::quadrature::gauss_kronrod;
    const int dim = sol.config.dim;
    const double wall = wall_value(sol, ProfileMethod::bessel);
    std::vector<double> cuts{0.0, sol.rbar};
    const double piece = 2.0 / sol.decay_rate();
    const double end = sol.truncation_radius();
    for (double t = sol.rbar + piece; t < end; t += piece) cuts.push_back(t);
    cuts.push_back(end);

    auto integrate_moment = [&](auto integrand) {
        double value = 0.0;
        double error = 0.0;
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
            const bool inside = i == 0;
            auto f = [&](double r) {
                const ProfileValue p = inside ? interior_value(sol, r, ProfileMethod::bessel)
                                              : exterior_value(sol, r, ProfileMethod::bessel, wall);
                return integrand(p, inside ? 1.0 : -sol.config.beta, r);
            };
            double err = 0.0;
            value += gauss_kronrod<double, 31>::integrate(f, cuts[i], cuts[i + 1], 10, 1e-13, &err);
            error += err;
        }
        return std::pair{value, error / std::abs(value)};
    };
    RadialMoments m;
    double errs[4];
    std::tie(m.grad0, errs[0]) = integrate_moment(
        [dim](const ProfileValue& p, double, double r) { return p.derivative * p.derivative * std::pow(r, dim - 1); });
    std::tie(m.grad1, errs[1]) = integrate_moment(
        [dim](const ProfileValue& p, double, double r) { return p.derivative * p.derivative * std::pow(r, dim); });
    std::tie(m.mass0, errs[2]) = integrate_moment(
        [dim](const ProfileValue& p, double wt, double r) { return wt * p.value * p.value * std::pow(r, dim - 1); });
    std::tie(m.mass1, errs[3]) = integrate_moment(
        [dim](const ProfileValue& p, double wt, double r) { return wt * p.value * p.value * std::pow(r, dim); });
    m.error = *std::max_element(std::begin(errs), std::end(errs));
    return m;
}

// |Σ terms| / max |term|.
double normalized_sum(std::initializer_list<double> signed_terms) {
    double sum = 0.0;
    double scale = 0.0;
    for (double t : signed_terms) {
        sum += t;
        scale = std::max(scale, std::abs(t));
    }
    return scale > 0.0 ? std::abs(sum) / scale : 0.0;
}

RadialMoments radial_moments(const RadialSolution& sol) {
    if (sol.method == ProfileMethod::bessel) return bessel_moments(sol);
    // The error estimate compares against a run at a looser tolerance.
    RadialMoments fine = shooting_moments(sol, 1e-13);
    const RadialMoments coarse = shooting_moments(sol, 1e-11);
    auto rel = [](double a, double b) { return std::abs(a - b) / std::max(std::abs(a), 1e-300); };
    fine.error = std::max({rel(fine.grad0, coarse.grad0), rel(fine.grad1, coarse.grad1),
                           rel(fine.mass0, coarse.mass0), rel(fine.mass1, coarse.mass1)});
    return fine;
}

}  // namespace

LimitConstants limit_constants(const RadialSolution& sol) {
    const int dim = sol.config.dim;
    const double n = dim;
    const RadialMoments mom = radial_moments(sol);

    const double half_sphere = n * unit_ball_volume(dim) / 2.0;
    const double equator = unit_ball_volume(dim - 1);
    LimitConstants c;
    c.grad_half = half_sphere * mom.grad0;
    c.mass_half = half_sphere * mom.mass0;
    c.moment_grad = equator * mom.grad1;
    c.gamma = c.moment_grad / (n + 1);
    c.gamma1 = equator * mom.mass1;
    c.big_gamma = std::pow(2.0, 1.0 + 1.0 / n) * (n - 1) / (n + 1) * c.moment_grad / c.grad_half;
    c.wall_value = wall_value(sol, sol.method);

    // Beyond R_max, w^2 and w'^2 r^N are dominated by a decaying exponential
    // of rate 2√(μβ) (up to the algebraic factor, which is decreasing there).
    const double end = sol.truncation_radius();
    const ProfileValue tail = eval_profile(sol, end);
    c.tail_bound = (1.0 + sol.config.beta) * (tail.value * tail.value + tail.derivative * tail.derivative) *
                   std::pow(end, n) / sol.decay_rate();

    c.error_estimate = mom.error;
    if (!(c.error_estimate < 1e-8)) {
        std::ostringstream os;
        os << "radial_limit: quadrature did not converge (relative error estimate "
           << c.error_estimate << ")";
        throw SolverError(os.str());
    }
    return c;
}

double normal_derivative_moment(const RadialSolution& sol) {
    using boost::math::quadrature::gauss_kronrod;
    const int dim = sol.config.dim;
    // ∫_{S^{N-1}_+} x_N^3 dS = |S^{N-2}| ∫_0^{π/2} cos^3θ sin^{N-2}θ dθ.
    double angular = 1.0;
    if (dim >= 2) {
        const double sphere = (dim - 1) * unit_ball_volume(dim - 1);
        angular = sphere * gauss_kronrod<double, 61>::integrate(
                               [dim](double t) { return std::pow(std::cos(t), 3) * std::pow(std::sin(t), dim - 2); },
                               0.0, std::numbers::pi / 2, 10, 1e-14);
    }
    return 0.5 * angular * radial_moments(sol).grad1;
}

std::map<std::string, double> identity_residuals(const RadialSolution& sol, const LimitConstants& c) {
    const int dim = sol.config.dim;
    const double n = dim;
    const double mu = sol.mu;
    const double beta = sol.config.beta;

    std::map<std::string, double> out;
    const double boundary_term = 4.0 * mu * sol.rbar * unit_ball_volume(dim - 1) /
                                 (n * (n + 1) * unit_ball_volume(dim)) * c.mass_half;
    out["technical"] = normalized_sum({mu * c.gamma1, -(n - 1) * c.gamma, 2.0 * c.gamma, -boundary_term});
    out["pohozaev"] = normalized_sum({c.grad_half, -mu * (1 + beta) / 4.0 * n * unit_ball_volume(dim) *
                                                       std::pow(sol.rbar, n) * c.wall_value * c.wall_value});
    out["eigen"] = normalized_sum({c.grad_half, -mu * c.mass_half});
    return out;
}

std::map<std::string, double> check_identities(const RadialSolution& sol) {
    auto out = identity_residuals(sol, limit_constants(sol));
    const ProfileValue in = interior_value(sol, sol.rbar, sol.method);
    const ProfileValue out_side = exterior_value(sol, sol.rbar, sol.method, in.value);
    out["c1_value"] = normalized_sum({in.value, -out_side.value});
    out["c1_derivative"] = normalized_sum({in.derivative, -out_side.derivative});
    return out;
}

}  // namespace eigendesign
