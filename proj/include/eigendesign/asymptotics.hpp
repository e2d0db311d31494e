#pragma once

// Small-δ behaviour of the optimal eigenvalue: expansion algebra, the
// predicted upper bound, and sweeps that measure the concentration geometry.

#include <optional>
#include <string>
#include <vector>

#include "eigendesign/mesh.hpp"
#include "eigendesign/optimizer.hpp"
#include "eigendesign/radial_limit.hpp"

namespace eigendesign {

/// δ = a r^N (1 − b r + o(r)) and ν = c r^{-2} (1 − d r + o(r)) as r → 0.
struct ExpansionPair {
    double a = 1.0;
    double b = 0.0;
    double c = 1.0;
    double d = 0.0;

    void validate() const;
};

struct ComposedExpansion {
    double coefficient = 0.0;  // ν ≈ coefficient · δ^{-2/N} (1 − correction · δ^{1/N})
    double correction = 0.0;
};

/// Eliminates r between the two expansions of an ExpansionPair.
ComposedExpansion compose_expansions(const ExpansionPair& p, int dim);

/// Expansions of the measure and of the Rayleigh quotient of the half-ball
/// competitor placed at a boundary point of mean curvature H (α = (N−1)H).
/// Requires a unit-measure limit (sol.config.mass == 1).
ExpansionPair competitor_expansions(const RadialSolution& sol, const LimitConstants& constants,
                                    double mean_curvature);

/// 4^{-1/N} I_M δ^{-2/N} (1 − Γ Ĥ δ^{1/N}) with I_M the limit eigenvalue of the
/// unit-measure ball. Throws InvalidArgument if the correction reaches 1.
double predicted_bound(double delta, const LimitConfig& config, const LimitConstants& constants, double Hhat);

struct SweepRecord {
    double delta = 0.0;
    double h = 0.0;
    int nodes = 0;
    double od_value = 0.0;
    double rescaled = 0.0;  // od · δ^{2/N}
    Point maximizer{0.0, 0.0};
    int maximizer_node = -1;
    double dist_boundary = 0.0;
    std::vector<double> annulus_eps;  // ε values tested
    std::vector<bool> annulus_ok;     // one flag per ε
    double boundary_contact = 0.0;
    double min_over_D = 0.0;
    int connected_components = 0;
    int iterations = 0;
    bool converged = false;
    int best_seed = -1;
};

struct SweepFailure {
    double delta = 0.0;
    std::string message;
};

/// Solution data kept per δ when requested, e.g. for decay_report.
struct SweepState {
    double delta = 0.0;
    GeneratedMesh mesh;
    OptState state;
};

struct SweepOptions {
    double h_factor = 1.0 / 12.0;  // h = h_factor · δ^{h_exponent}
    std::optional<double> h_exponent;  // 1/N when empty
    std::optional<double> h;       // fixed mesh size instead of the δ coupling
    std::optional<Mesh> mesh;      // imported mesh used for every δ
    std::vector<double> annulus_eps{0.25, 0.5};
    std::optional<SeedStrategy> seeds;  // default_seeds when empty
    OptimizeOptions optimize;
    bool keep_states = false;
};

struct SweepResult {
    std::vector<SweepRecord> records;  // in the order of the input deltas
    std::vector<SweepFailure> failures;
    std::vector<SweepState> states;    // filled when keep_states is set
};

/// Optimizes at each δ (a strictly decreasing sequence) and measures the
/// optimal design. A failure at one δ is recorded and the sweep continues.
SweepResult sweep(const Shape& shape, double beta, const std::vector<double>& deltas,
                  const SweepOptions& options = {});

/// Measurements of an optimized state on its mesh. u is rescaled to unit L² norm.
SweepRecord measure(const Mesh& mesh, const OptState& state, double delta,
                    const std::vector<double>& annulus_eps = {0.25, 0.5});

struct DecayRow {
    int j = 0;
    double radius = 0.0;  // j δ^{1/N}
    double value = 0.0;   // δ^{1/2} max{u : |x − P| ≥ radius}, u of unit L² norm
};

struct DecayReport {
    std::vector<DecayRow> rows;  // j = 0..J while the region is non-empty
    double slope = 0.0;          // least-squares slope of log value over j ≥ 1
};

DecayReport decay_report(const Mesh& mesh, const EigenResult& eigen, double delta, int max_j = 10);

/// Least-squares slope of log od against log δ over the last `last` records.
double loglog_slope(const std::vector<SweepRecord>& records, int last = 3);

}  // namespace eigendesign
