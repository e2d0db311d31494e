#pragma once

// Principal positive eigenvalue of -Δu = λ m u with Neumann conditions for a
// piecewise constant bang-bang weight m on P1 elements.

#include <cstdint>
#include <memory>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "eigendesign/mesh.hpp"

namespace eigendesign {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Element weights m_e = -β + (1+β)θ_e with θ_e ∈ [0,1]; θ_e = 1 on D and at
/// most one element is fractional.
struct Design {
    std::uint64_t mesh_ref = 0;
    double beta = 1.0;
    std::vector<double> element_weight;
    double delta = 0.0;  // Σ |e| θ_e

    /// Builds the weight from per-element fractions θ_e.
    static Design from_fractions(const Mesh& mesh, double beta, const std::vector<double>& theta);

    double fraction(int element) const { return (element_weight[element] + beta) / (1.0 + beta); }
    std::vector<double> fractions() const;
    int fractional_element() const;  // -1 if the design is exactly bang-bang
    /// ∫ m over Ω.
    double weight_integral(const Mesh& mesh) const;
    /// Measure of the symmetric difference, counting fractional parts.
    double symmetric_difference(const Design& other, const Mesh& mesh) const;

    void validate(const Mesh& mesh) const;
};

/// Upper limit on δ for a positive principal eigenvalue: β|Ω|/(1+β).
double admissible_delta(const Mesh& mesh, double beta);

struct FemMatrices {
    SparseMatrix stiffness;
    SparseMatrix mass;
    SparseMatrix weighted_mass;
};

/// Element mass quadrature. mixed is the average of consistent and lumped;
/// corrected (1D only) adds the weight-jump terms that remove the remaining
/// O(h²) eigenvalue error at interfaces of m. automatic is lumped in 2D; in 1D
/// it is corrected while λ β h² ≤ 12 (the mesh resolves the decay outside D,
/// which keeps the eigenvector positive) and lumped otherwise.
enum class MassKind { automatic, consistent, lumped, mixed, corrected };

struct EigenResult {
    double lambda = 0.0;
    Eigen::VectorXd u;          // positive, max-normalized
    double rho_residual = 0.0;  // |ρ(λ)|
    double rayleigh = 0.0;      // uᵀKu / uᵀWu
    double residual = 0.0;      // ‖Ku − λWu‖ / ‖Mu‖
    int iterations = 0;         // ρ evaluations
    MassKind mass = MassKind::automatic;  // quadrature actually used
};


struct SolverOptions {
    MassKind mass = MassKind::automatic;
    int max_inverse_iterations = 400;
    int max_scan_steps = 80;
    int max_newton_steps = 100;
    double bracket_tol = 1e-9;  // relative
};

/// Assembles K, M and W on a fixed mesh and evaluates ρ(λ), the smallest
/// eigenvalue of (K − λW, M), by shifted inverse iteration. One instance per
/// thread: factorizations are cached internally.
class PrincipalSolver {
public:
    explicit PrincipalSolver(const Mesh& mesh, SolverOptions options = {});
    ~PrincipalSolver();
    PrincipalSolver(PrincipalSolver&&) noexcept;
    PrincipalSolver& operator=(PrincipalSolver&&) noexcept;

    const Mesh& mesh() const;
    const SparseMatrix& stiffness() const;
    const SparseMatrix& mass() const;
    SparseMatrix weighted_mass(const Design& design) const;
    FemMatrices assemble(const Design& design) const;

    double rho(const Design& design, double lambda);

    /// The unique positive root of ρ. warm_start (nodal vector) and
    /// lambda_upper (a known upper bound such as the previous iterate under
    /// the same quadrature) are optional accelerators. mass overrides the
    /// solver option for this call.
    EigenResult solve(const Design& design, const Eigen::VectorXd* warm_start = nullptr,
                      double lambda_upper = 0.0, MassKind mass = MassKind::automatic);

    /// Element values f_e with uᵀWu = Σ_e w_e |e| f_e: the mean of u² over e
    /// under the quadrature that defines W.
    std::vector<double> element_mean_square(const Eigen::VectorXd& u, MassKind mass = MassKind::automatic) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

FemMatrices assemble(const Mesh& mesh, const Design& design);
std::vector<double> element_mean_square(const Mesh& mesh, const Eigen::VectorXd& u,
                                        MassKind kind = MassKind::automatic);
double rho(const Mesh& mesh, const Design& design, double lambda);
EigenResult principal_lambda(const Mesh& mesh, const Design& design, SolverOptions options = {});

}  // namespace eigendesign
