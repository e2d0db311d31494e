#include "eigendesign/eigensolver.hpp"

#include <algorithm>
#include <array>
#include <memory>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/SparseCholesky>

#include "eigendesign/error.hpp"

namespace eigendesign {

namespace {

constexpr double kFractionTol = 1e-12;

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(10);
    os << v;
    return os.str();
}

// Local P1 matrices. The average of consistent and lumped mass turns the 1D
// scheme into Numerov's method, fourth order away from jumps of m; at a jump
// the leading error is (h²/24)(w_L − w_R)(u²)', which the corrected kind
// subtracts with a symmetric diagonal term. 2D uses the lumped mass so that
// the shifted operator stays an M-matrix on Delaunay meshes and the computed
// eigenvector is positive to the last bit.
struct LocalMatrices {
    double k[3][3];
    double m[3][3];
};

MassKind resolve(MassKind kind, int dim) {
    if (kind == MassKind::corrected && dim != 1) throw InvalidArgument("eigensolver: corrected mass is 1D only");
    if (kind != MassKind::automatic) return kind;
    return dim == 1 ? MassKind::corrected : MassKind::lumped;
}

LocalMatrices local_matrices(const Mesh& mesh, int e, MassKind kind) {
    LocalMatrices lm{};
    const auto& el = mesh.elements[e];
    const double meas = mesh.element_measure[e];
    const int npe = mesh.nodes_per_element();
    // Consistent mass is |e|(1 + δ_ij)/((d+1)(d+2)), lumped is |e|δ_ij/(d+1).
    const double consistent_unit = meas / ((npe) * (npe + 1));
    const double lumped = meas / npe;
    for (int i = 0; i < npe; ++i)
        for (int j = 0; j < npe; ++j) {
            const double c = consistent_unit * (i == j ? 2.0 : 1.0);
            const double l = i == j ? lumped : 0.0;
            lm.m[i][j] = kind == MassKind::consistent ? c : kind == MassKind::lumped ? l : 0.5 * (c + l);
        }
    if (mesh.dim == 1) {
        lm.k[0][0] = lm.k[1][1] = 1.0 / meas;
        lm.k[0][1] = lm.k[1][0] = -1.0 / meas;
        return lm;
    }
    double gx[3], gy[3];
    for (int i = 0; i < 3; ++i) {
        const Point& b = mesh.vertices[el[(i + 1) % 3]];
        const Point& c = mesh.vertices[el[(i + 2) % 3]];
        // ∇φ_i = perp(c − b) / (2|e|)
        gx[i] = (b[1] - c[1]) / (2.0 * meas);
        gy[i] = (c[0] - b[0]) / (2.0 * meas);
    }
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) lm.k[i][j] = meas * (gx[i] * gx[j] + gy[i] * gy[j]);
    return lm;
}

// 1D weight-jump correction at interior node i between elements L and R:
// W(r,r) −= c (w_L − w_R), W(l,l) += c (w_L − w_R), l/r the outer nodes.
struct Interface {
    int left_element, right_element;
    int left_node, right_node;
    double coef;
};

std::vector<Interface> jump_interfaces(const Mesh& mesh) {
    std::vector<Interface> out;
    std::vector<int> left_of(mesh.vertex_count(), -1), right_of(mesh.vertex_count(), -1);
    for (int e = 0; e < mesh.element_count(); ++e) {
        right_of[mesh.elements[e][0]] = e;  // e lies to the right of its first node
        left_of[mesh.elements[e][1]] = e;
    }
    for (int v = 0; v < mesh.vertex_count(); ++v) {
        const int L = left_of[v], R = right_of[v];
        if (L < 0 || R < 0) continue;
        const double hl = mesh.element_measure[L], hr = mesh.element_measure[R];
        // (h_L h_R / 24) (u²)' with (u²)' from the centered difference.
        out.push_back({L, R, mesh.elements[L][0], mesh.elements[R][1], hl * hr / (24.0 * (hl + hr))});
    }
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Design

Design Design::from_fractions(const Mesh& mesh, double beta, const std::vector<double>& theta) {
    if (!(beta > 0.0)) throw InvalidArgument("design: beta must be > 0");
    if (static_cast<int>(theta.size()) != mesh.element_count())
        throw InvalidArgument("design: one fraction per element required");
    Design d;
    d.mesh_ref = mesh.fingerprint();
    d.beta = beta;
    d.element_weight.resize(theta.size());
    for (std::size_t e = 0; e < theta.size(); ++e) {
        double t = theta[e];
        if (!(t >= -kFractionTol && t <= 1.0 + kFractionTol)) throw InvalidArgument("design: fraction outside [0,1]");
        t = std::clamp(t, 0.0, 1.0);
        d.element_weight[e] = t == 1.0 ? 1.0 : t == 0.0 ? -beta : -beta + (1.0 + beta) * t;
        d.delta += mesh.element_measure[e] * t;
    }
    return d;
}

std::vector<double> Design::fractions() const {
    std::vector<double> t(element_weight.size());
    for (std::size_t e = 0; e < t.size(); ++e) t[e] = fraction(static_cast<int>(e));
    return t;
}

int Design::fractional_element() const {
    for (std::size_t e = 0; e < element_weight.size(); ++e) {
        const double w = element_weight[e];
        if (w > -beta && w < 1.0) return static_cast<int>(e);
    }
    return -1;
}

double Design::weight_integral(const Mesh& mesh) const {
    double s = 0.0;
    for (std::size_t e = 0; e < element_weight.size(); ++e) s += mesh.element_measure[e] * element_weight[e];
    return s;
}

double Design::symmetric_difference(const Design& other, const Mesh& mesh) const {
    double s = 0.0;
    for (int e = 0; e < mesh.element_count(); ++e) s += mesh.element_measure[e] * std::abs(fraction(e) - other.fraction(e));
    return s;
}

void Design::validate(const Mesh& mesh) const {
    if (mesh_ref != mesh.fingerprint()) throw InvalidArgument("design: mesh mismatch");
    if (static_cast<int>(element_weight.size()) != mesh.element_count())
        throw InvalidArgument("design: weight count does not match the mesh");
    if (!(beta > 0.0)) throw InvalidArgument("design: beta must be > 0");
    int fractional = 0;
    double measure = 0.0;
    for (int e = 0; e < mesh.element_count(); ++e) {
        const double w = element_weight[e];
        if (!(w >= -beta && w <= 1.0)) throw InvalidArgument("design: weight outside [-beta, 1]");
        if (w > -beta && w < 1.0) ++fractional;
        measure += mesh.element_measure[e] * fraction(e);
    }
    if (fractional > 1) throw InvalidArgument("design: more than one fractional element");
    if (std::abs(measure - delta) > 1e-12 * std::max(1.0, mesh.domain_measure))
        throw InvalidArgument("design: delta does not match the weights");
}

double admissible_delta(const Mesh& mesh, double beta) { return beta * mesh.domain_measure / (1.0 + beta); }

// ---------------------------------------------------------------------------
// PrincipalSolver

namespace {

// Matrices and factorization cache for one concrete mass quadrature.
struct Backend {
    const Mesh& mesh;
    SolverOptions options;
    MassKind kind;
    SparseMatrix K;
    SparseMatrix M;
    SparseMatrix A;  // working matrix, same pattern
    std::vector<std::array<double, 9>> local_mass;
    std::vector<std::array<int, 9>> value_pos;
    Eigen::SimplicialLLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> llt;
    bool analyzed = false;
    int npe = 2;
    double k_scale = 0.0;  // max_i Σ_j |K_ij| / Σ_j M_ij, bounds ‖M⁻¹K‖ up to a mesh constant

    std::vector<Interface> interfaces;
    std::vector<std::array<int, 2>> interface_pos;  // (left node, right node) diagonal slots

    struct RhoEval {
        double rho = 0.0;
        Eigen::VectorXd x;  // M-normalized
        double residual = 0.0;
        double overshoot = 0.0;  // initial Rayleigh estimate minus ρ
        int iterations = 0;
    };

    Backend(const Mesh& m, SolverOptions opts, MassKind k) : mesh(m), options(opts), kind(k) {
        const int n = mesh.vertex_count();
        const int ne = mesh.element_count();
        npe = mesh.nodes_per_element();
        std::vector<Eigen::Triplet<double>> kt, mt;
        kt.reserve(static_cast<std::size_t>(ne) * npe * npe);
        mt.reserve(kt.capacity());
        local_mass.resize(ne);
        for (int e = 0; e < ne; ++e) {
            const LocalMatrices lm = local_matrices(mesh, e, kind);
            const auto& el = mesh.elements[e];
            for (int i = 0; i < npe; ++i)
                for (int j = 0; j < npe; ++j) {
                    kt.emplace_back(el[i], el[j], lm.k[i][j]);
                    mt.emplace_back(el[i], el[j], lm.m[i][j]);
                    local_mass[e][i * 3 + j] = lm.m[i][j];
                }
        }
        K.resize(n, n);
        M.resize(n, n);
        // Explicit zeros are kept, so K and M share one pattern.
        K.setFromTriplets(kt.begin(), kt.end());
        M.setFromTriplets(mt.begin(), mt.end());
        K.makeCompressed();
        M.makeCompressed();
        if (K.nonZeros() != M.nonZeros()) throw Error("eigensolver: stiffness and mass patterns differ");
        A = K;
        value_pos.resize(ne);
        for (int e = 0; e < ne; ++e) {
            const auto& el = mesh.elements[e];
            for (int i = 0; i < npe; ++i)
                for (int j = 0; j < npe; ++j)
                    value_pos[e][i * 3 + j] = static_cast<int>(&M.coeffRef(el[i], el[j]) - M.valuePtr());
        }
        if (kind == MassKind::corrected) {
            interfaces = jump_interfaces(mesh);
            for (const Interface& f : interfaces)
                interface_pos.push_back({value_pos[f.left_element][0], value_pos[f.right_element][4]});
        }
        const Eigen::VectorXd ksum = K.cwiseAbs() * Eigen::VectorXd::Ones(n);
        const Eigen::VectorXd msum = M * Eigen::VectorXd::Ones(n);
        k_scale = ksum.cwiseQuotient(msum).maxCoeff();
    }

    Eigen::VectorXd weight_values(const Design& d) const {
        Eigen::VectorXd w = Eigen::VectorXd::Zero(M.nonZeros());
        for (int e = 0; e < mesh.element_count(); ++e) {
            const double we = d.element_weight[e];
            for (int i = 0; i < npe; ++i)
                for (int j = 0; j < npe; ++j) w[value_pos[e][i * 3 + j]] += we * local_mass[e][i * 3 + j];
        }
        for (std::size_t i = 0; i < interfaces.size(); ++i) {
            const Interface& f = interfaces[i];
            const double jump = d.element_weight[f.left_element] - d.element_weight[f.right_element];
            w[interface_pos[i][1]] -= f.coef * jump;
            w[interface_pos[i][0]] += f.coef * jump;
        }
        return w;
    }

    SparseMatrix with_values(const Eigen::VectorXd& v) const {
        SparseMatrix out = M;
        std::copy(v.data(), v.data() + v.size(), out.valuePtr());
        return out;
    }

    void check_design(const Design& d) const { d.validate(mesh); }

    // Smallest eigenvalue of (K − λW, M) by shifted inverse iteration. The
    // shift is kept below the spectrum, verified by a successful Cholesky
    // factorization; K − λW + (λ+1)M ⪰ K + M is always positive definite.
    // eta_hint > 0 is the expected distance from the initial Rayleigh
    // estimate down to ρ; a good hint saves failed factorizations.
    RhoEval evaluate(const Eigen::VectorXd& wv, double lambda, double weight_bound, const Eigen::VectorXd* warm,
                     double eta_hint = 0.0) {
        const int n = mesh.vertex_count();
        const Eigen::Map<const Eigen::VectorXd> kv(K.valuePtr(), K.nonZeros());
        const Eigen::Map<const Eigen::VectorXd> mv(M.valuePtr(), M.nonZeros());
        SparseMatrix A0 = K;
        Eigen::Map<Eigen::VectorXd>(A0.valuePtr(), A0.nonZeros()) = kv - lambda * wv;

        RhoEval out;
        out.x = (warm && warm->size() == n) ? *warm : Eigen::VectorXd::Ones(n);
        out.x /= std::sqrt(out.x.dot(M * out.x));
        double theta = out.x.dot(A0 * out.x);

        const double scale = 1.0 + lambda;
        // W ⪯ M for the plain quadratures. The jump terms add at most
        // (1+β)(h_L+h_R)/24 to a diagonal entry of M ⪰ (h_L+h_R)/3, hence
        // W ⪯ (1 + (1+β)/8) M and the floor below is always safe.
        const double excess = interfaces.empty() ? 0.0 : weight_bound / 8.0;
        const double floor = -lambda * (1.0 + excess) - 1.0;
        // The residual cannot go below the rounding level of the operator.
        const double rounding = 64 * std::numeric_limits<double>::epsilon() * (k_scale + lambda * weight_bound);
        const double tol = std::max(1e-10 * scale, rounding);
        const double theta0 = theta;
        double eta = eta_hint > 0.0 ? std::max(eta_hint, 1e-6 * scale) : (warm ? 1e-4 : 1e-2) * scale;
        int stagnant = 0;
        double prev = std::numeric_limits<double>::infinity();
        for (int outer = 0; outer < 60; ++outer) {
            const double sigma = std::max(theta - eta, floor);
            Eigen::Map<Eigen::VectorXd>(A.valuePtr(), A.nonZeros()) = kv - lambda * wv - sigma * mv;
            if (!analyzed) {
                llt.analyzePattern(A);
                analyzed = true;
            }
            llt.factorize(A);
            if (llt.info() != Eigen::Success) {
                if (sigma == floor) throw SolverError("eigensolver: shifted operator is not positive definite");
                eta *= 10.0;
                continue;
            }
            for (int it = 0; it < options.max_inverse_iterations; ++it) {
                Eigen::VectorXd y = llt.solve(M * out.x);
                if (y.sum() < 0) y = -y;
                out.x = y / std::sqrt(y.dot(M * y));
                const Eigen::VectorXd Ax = A0 * out.x;
                const Eigen::VectorXd Mx = M * out.x;
                theta = out.x.dot(Ax);
                out.residual = (Ax - theta * Mx).norm() / Mx.norm();
                ++out.iterations;
                if (out.residual <= tol) {
                    out.rho = theta;
                    out.overshoot = theta0 - theta;
                    return out;
                }
                stagnant = out.residual > 0.5 * prev ? stagnant + 1 : 0;
                if (stagnant >= 3 && out.residual <= 1e3 * tol) {
                    out.rho = theta;  // roundoff floor
                    out.overshoot = theta0 - theta;
                    return out;
                }
                if (it >= 2 && out.residual > 0.2 * prev) break;  // slow: move the shift closer
                prev = out.residual;
            }
            eta = std::max(0.05 * (theta - sigma), 1e-12 * scale);
        }
        throw SolverError("eigensolver: inverse iteration did not converge, last residual " + fmt(out.residual));
    }
    // Root of ρ by scan and safeguarded Newton. Positivity of u is checked by the caller.
    EigenResult solve(const Design& design, const Eigen::VectorXd* warm_start, double lambda_upper) {
        Backend& s = *this;
        const Eigen::VectorXd wv = s.weight_values(design);
        const SparseMatrix W = s.with_values(wv);
        // With a diagonal W, ρ(λ) > 0 for all λ unless some nodal weight is positive.
        if (kind == MassKind::lumped && !(W.diagonal().maxCoeff() > 0.0))
            throw SolverError("eigensolver: no nodal weight is positive; D is too fragmented for this mesh");
        const double tol = s.options.bracket_tol;

        EigenResult res;
        double lo = 0.0;
        double hi = std::numeric_limits<double>::infinity();
        double lambda = 1.0 / std::pow(s.mesh.diameter(), 2);
        Eigen::VectorXd warm;
        if (warm_start && warm_start->size() == s.mesh.vertex_count()) {
            warm = *warm_start;
        } else {
            // Indicator of the closure of D.
            warm = Eigen::VectorXd::Zero(s.mesh.vertex_count());
            for (int e = 0; e < s.mesh.element_count(); ++e)
                if (design.fraction(e) > 0.0)
                    for (int i = 0; i < s.npe; ++i) warm[s.mesh.elements[e][i]] = 1.0;
        }
        const Eigen::VectorXd* guess = &warm;
        // The Rayleigh quotient of any u with uᵀWu > 0 bounds λ from above.
        const double denom = warm.dot(W * warm);
        if (denom > 0.0) lambda = warm.dot(s.K * warm) / denom;
        if (lambda_upper > 0.0) lambda = denom > 0.0 ? std::min(lambda, lambda_upper) : lambda_upper;
        if (!(denom > 0.0) && !(warm_start && warm_start->size() == s.mesh.vertex_count())) guess = nullptr;

        int scan = 0;
        double hint = 0.0;
        for (int step = 0;; ++step) {
            if (step > s.options.max_scan_steps + s.options.max_newton_steps)
                throw SolverError("eigensolver: root iteration exhausted in [" + fmt(lo) + ", " + fmt(hi) + "]");
            RhoEval ev = s.evaluate(wv, lambda, 1.0 + design.beta, guess, hint);
            ++res.iterations;
            // Newton errors shrink quadratically, so the last miss is a generous margin.
            hint = 2.0 * ev.overshoot;
            warm = ev.x;
            guess = &warm;
            const double slope = -ev.x.dot(W * ev.x);  // dρ/dλ
            if (ev.rho < 0.0)
                hi = std::min(hi, lambda);
            else
                lo = std::max(lo, lambda);

            // |ρ|/|ρ'| is the distance to the root to first order.
            if (slope < 0.0 && std::abs(ev.rho) <= 0.5 * tol * lambda * std::abs(slope)) {
                res.lambda = lambda;
                res.rho_residual = std::abs(ev.rho);
                break;
            }
            if (!std::isfinite(hi)) {
                if (++scan > s.options.max_scan_steps)
                    throw SolverError("eigensolver: bracket scan exhausted at lambda " + fmt(lambda));
                lambda *= 2.0;
                continue;
            }
            if (hi - lo <= tol * hi) {
                res.lambda = lambda;
                res.rho_residual = std::abs(ev.rho);
                break;
            }
            // Newton, safeguarded by the bracket. ρ is concave, so steps taken
            // from the right of the root stay on the right.
            double next = slope < 0.0 ? lambda - ev.rho / slope : 0.5 * (lo + hi);
            if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
            lambda = next;
        }

        Eigen::VectorXd u = warm;
        u /= u.maxCoeff();
        const Eigen::VectorXd Ku = s.K * u;
        const Eigen::VectorXd Wu = W * u;
        res.rayleigh = u.dot(Ku) / u.dot(Wu);
        res.residual = (Ku - res.lambda * Wu).norm() / (s.M * u).norm();
        res.u = std::move(u);
        res.mass = kind;
        return res;
        }

};
}  // namespace

struct PrincipalSolver::Impl {
    Mesh mesh;
    SolverOptions options;
    MassKind default_kind;
    double max_h2 = 0.0;  // largest squared element size (1D)
    std::array<std::unique_ptr<Backend>, 5> backends;

    Impl(const Mesh& m, SolverOptions opts) : mesh(m), options(opts), default_kind(resolve(opts.mass, m.dim)) {
        for (double h : mesh.element_measure) max_h2 = std::max(max_h2, h * h);
        backend(default_kind);
    }

    Backend& backend(MassKind kind) {
        auto& b = backends[static_cast<int>(kind)];
        if (!b) b = std::make_unique<Backend>(mesh, options, kind);
        return *b;
    }
    const Backend& primary() const { return *backends[static_cast<int>(default_kind)]; }

    // Off-diagonals of K − λW stay ≤ 0 under the mixed 1D mass, which makes
    // the root eigenvector positive, when λ β h² ≤ 12 on every element.
    bool resolves_decay(double lambda, double beta) const { return lambda * beta * max_h2 <= 12.0; }
};


PrincipalSolver::PrincipalSolver(const Mesh& mesh, SolverOptions options)
    : impl_(std::make_unique<Impl>(mesh, options)) {}
PrincipalSolver::~PrincipalSolver() = default;
PrincipalSolver::PrincipalSolver(PrincipalSolver&&) noexcept = default;
PrincipalSolver& PrincipalSolver::operator=(PrincipalSolver&&) noexcept = default;

const Mesh& PrincipalSolver::mesh() const { return impl_->mesh; }
const SparseMatrix& PrincipalSolver::stiffness() const { return impl_->primary().K; }
const SparseMatrix& PrincipalSolver::mass() const { return impl_->primary().M; }

SparseMatrix PrincipalSolver::weighted_mass(const Design& design) const {
    const Backend& b = impl_->primary();
    b.check_design(design);
    return b.with_values(b.weight_values(design));
}

FemMatrices PrincipalSolver::assemble(const Design& design) const {
    return {stiffness(), mass(), weighted_mass(design)};
}

double PrincipalSolver::rho(const Design& design, double lambda) {
    if (!(lambda >= 0.0)) throw InvalidArgument("eigensolver: lambda_trial must be >= 0");
    Backend& b = impl_->backend(impl_->default_kind);
    b.check_design(design);
    return b.evaluate(b.weight_values(design), lambda, 1.0 + design.beta, nullptr).rho;
}

EigenResult PrincipalSolver::solve(const Design& design, const Eigen::VectorXd* warm_start, double lambda_upper,
                                   MassKind mass) {
    Impl& s = *impl_;
    design.validate(s.mesh);
    if (!(design.weight_integral(s.mesh) < 0.0))
        throw InvalidArgument("eigensolver: nonnegative-average weight (integral of m must be < 0)");
    const MassKind requested = mass == MassKind::automatic ? s.options.mass : mass;
    EigenResult res;
    if (requested == MassKind::automatic && s.mesh.dim == 1) {
        res = s.backend(MassKind::corrected).solve(design, warm_start, lambda_upper);
        // An upper bound from another quadrature is not a bound here.
        if (!s.resolves_decay(res.lambda, design.beta))
            res = s.backend(MassKind::lumped).solve(design, warm_start, 0.0);
    } else {
        res = s.backend(resolve(requested, s.mesh.dim)).solve(design, warm_start, lambda_upper);
    }
    if (!(res.u.minCoeff() > 0.0))
        throw SolverError("eigensolver: principal eigenvector is not positive (min " + fmt(res.u.minCoeff()) + ")");
    return res;
}

std::vector<double> PrincipalSolver::element_mean_square(const Eigen::VectorXd& u, MassKind mass) const {
    return eigendesign::element_mean_square(impl_->mesh, u, mass == MassKind::automatic ? impl_->options.mass : mass);
}

std::vector<double> element_mean_square(const Mesh& mesh, const Eigen::VectorXd& u, MassKind kind) {
    if (u.size() != mesh.vertex_count()) throw InvalidArgument("eigensolver: one nodal value per vertex required");
    const MassKind k = resolve(kind, mesh.dim);
    const int npe = mesh.nodes_per_element();
    std::vector<double> f(mesh.element_count());
    for (int e = 0; e < mesh.element_count(); ++e) {
        const LocalMatrices lm = local_matrices(mesh, e, k);
        const auto& el = mesh.elements[e];
        double q = 0.0;
        for (int i = 0; i < npe; ++i)
            for (int j = 0; j < npe; ++j) q += u[el[i]] * lm.m[i][j] * u[el[j]];
        f[e] = q;
    }
    if (k == MassKind::corrected)
        for (const Interface& itf : jump_interfaces(mesh)) {
            const double d = itf.coef * (u[itf.right_node] * u[itf.right_node] - u[itf.left_node] * u[itf.left_node]);
            f[itf.left_element] -= d;
            f[itf.right_element] += d;
        }
    for (int e = 0; e < mesh.element_count(); ++e) f[e] /= mesh.element_measure[e];
    return f;
}

FemMatrices assemble(const Mesh& mesh, const Design& design) { return PrincipalSolver(mesh).assemble(design); }

double rho(const Mesh& mesh, const Design& design, double lambda) { return PrincipalSolver(mesh).rho(design, lambda); }

EigenResult principal_lambda(const Mesh& mesh, const Design& design, SolverOptions options) {
    return PrincipalSolver(mesh, options).solve(design);
}

}  // namespace eigendesign
