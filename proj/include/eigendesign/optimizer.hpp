#pragma once

// Minimization of the principal eigenvalue over designs of fixed measure δ by
// alternating eigensolves with bathtub updates, from several seeds.

#include <cstdint>
#include <string>
#include <vector>

#include "eigendesign/eigensolver.hpp"

namespace eigendesign {

struct BathtubResult {
    Design design;
    double threshold = 0.0;  // f-value of the element at the cut
};

/// Designs maximizing ∫ m u² at measure δ: elements by f_e descending (ties
/// by ascending index), the last one fractional.
BathtubResult bathtub_from_values(const Mesh& mesh, double beta, double delta, const std::vector<double>& f);

/// As above with f_e the mean of u² over e under the given mass quadrature.
BathtubResult bathtub_update(const Eigen::VectorXd& u, const Mesh& mesh, double beta, double delta,
                             MassKind kind = MassKind::automatic);

struct OptState {
    Design design;
    EigenResult eigen;
    int iteration = 0;
    std::vector<double> lambda_history;
    std::vector<double> sym_diff_history;  // |D_k Δ D_{k+1}|
    bool converged = false;
    int seed_id = -1;
};

struct SeedFailure {
    int seed_id = -1;
    std::string message;
};

struct OptimizeOptions {
    double tol = 1e-8;  // relative λ decrease and design change (fraction of |Ω|)
    int max_iter = 100;
    int threads = 0;    // 0: EIGENDESIGN_THREADS or hardware concurrency
    SolverOptions solver{.bracket_tol = 1e-12};
};

struct OptimizeResult {
    OptState best;
    std::vector<OptState> runs;      // successful seeds, by seed_id
    std::vector<SeedFailure> failures;
    /// Indices into runs of distinct designs whose λ is within tol of the best.
    std::vector<int> co_optimal;
};

/// Runs every seed to convergence. A failing seed is recorded and skipped;
/// SolverError is thrown only if all seeds fail.
OptimizeResult optimize(const Mesh& mesh, double beta, double delta, const std::vector<Design>& seeds,
                        const OptimizeOptions& options = {});

struct SeedStrategy {
    enum class Kind { boundary_caps, random, centered };
    Kind kind = Kind::boundary_caps;
    int count = 8;
    std::uint64_t rng_seed = 0;

    static SeedStrategy boundary_caps(int n) { return {Kind::boundary_caps, n, 0}; }
    static SeedStrategy random(int n, std::uint64_t seed) { return {Kind::random, n, seed}; }
    static SeedStrategy centered() { return {Kind::centered, 1, 0}; }
};

/// Initial designs of measure exactly δ. Caps sit at n boundary points equally
/// spaced in arc length from the vertex of largest x (1D: the two end points);
/// random seeds grow connected element clusters from random elements in
/// random order; centered is a ball around the centroid of Ω.
std::vector<Design> seed_designs(const Mesh& mesh, double beta, double delta, const SeedStrategy& strategy);

/// boundary_caps(8) followed by centered.
std::vector<Design> default_seeds(const Mesh& mesh, double beta, double delta);

/// Design filling δ by elements taken in the given order, the last fractional.
Design fill_design(const Mesh& mesh, double beta, double delta, const std::vector<int>& order);

/// Worker count from EIGENDESIGN_THREADS, else hardware concurrency (≥ 1).
int worker_count(int requested = 0);

}  // namespace eigendesign
