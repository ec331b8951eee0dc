#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flex/geometry.hpp"
#include "flex/region.hpp"

namespace flex::verify {

/// Per-family maximum absolute violations, re-derived from the network data
/// and the scenario options rather than from the assembled rows, so assembly
/// bugs cannot hide.
struct ResidualReport {
    std::map<std::string, double> family_max;
    double max_any = 0.0;
    double tol = 0.0;  // threshold the report was evaluated against

    bool pass() const { return max_any <= tol; }
    bool pass(double at) const { return max_any <= at; }
};

ResidualReport check_residuals(const model::OptimizationModel& m,
                               std::span<const double> assignment, double tol);

/// Largest relaxation slack l*v - (p^2 + q^2) over all line replicas.
/// Zero means the cone relaxation reproduced the exact physics.
double relaxation_gap(const model::OptimizationModel& m, std::span<const double> assignment);

struct OracleResult {
    bool feasible = false;
    bool solver_failure = false;  // distinct from a genuine infeasibility
    double witness_gap = 0.0;     // relaxation gap of the stored witness
    double witness_residual = 0.0;
    std::string diagnostic;
    solve::Solution witness;
};

/// Solves the full multi-period model with the interface exchange held to
/// the given path (one point per period, all couplings active; storage is
/// chained along the path). True iff a feasible dispatch exists. The path is
/// held within `path_band` per coordinate: boundary points pinned exactly
/// would leave the solve without a strict interior, and 1e-5 p.u. is far
/// below engineering resolution.
OracleResult feasibility_oracle(const net::Network& net,
                                const std::vector<geometry::Point>& pcc_path,
                                const model::ModelOptions& options = {},
                                model::CouplingMode mode = model::CouplingMode::AllPairs,
                                const solve::SolverOptions& solver = {},
                                double path_band = 1e-5);

struct VerificationReport {
    double residual_tol = 1e-6;
    double gap_tol = 1e-6;

    ResidualReport residuals;
    double max_gap = 0.0;

    int path_trials_attempted = 0;
    int path_trials_feasible = 0;
    std::string first_path_failure;

    int transitions_attempted = 0;
    int transitions_feasible = 0;
    std::string first_transition_failure;

    bool residual_pass = false;
    bool gap_pass = false;
    bool relaxation_inexact = false;  // gap above 1e-4 downgrades the verdict
    bool paths_pass = false;
    bool transitions_pass = false;

    bool all_pass() const {
        return residual_pass && gap_pass && !relaxation_inexact && paths_pass && transitions_pass;
    }
};

struct AuditOptions {
    int path_trials = 100;
    std::uint64_t seed = 1;
    bool check_transitions = true;  // every h-to-h' pair between consecutive periods
    double residual_tol = 1e-6;
    double gap_tol = 1e-6;
    solve::SolverOptions solver;
    int threads = 0;  // 0: FLEXMAP_THREADS / hardware
};

/// Batch driver: vertex residuals and relaxation gaps from the stored
/// dispatches, sampled interior deployment paths through the map, and
/// (optionally) exhaustive vertex-to-vertex transition checks.
VerificationReport audit_map(const region::FlexibilityMap& map, const net::Network& net,
                             const AuditOptions& options = {});

/// Text rendering of a report, one line per check.
std::string report_text(const VerificationReport& report);

}  // namespace flex::verify
