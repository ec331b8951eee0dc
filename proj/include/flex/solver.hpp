#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flex/conic.hpp"
#include "flex/model.hpp"

namespace flex::solve {

enum class SolveStatus : std::uint8_t { Optimal, Feasible, Infeasible, IterationLimit };

const char* status_name(SolveStatus s);

/// Sparse linear objective over model columns, always maximized.
using Objective = std::vector<std::pair<int, double>>;

struct SolverOptions {
    double feas_tol = 1e-6;        // residual-sweep acceptance threshold
    int max_iters = 100;           // interior-point iteration cap
    double comp_tol = 1e-6;        // charge/discharge complementarity threshold
    int max_nodes = 4096;          // cap on binary enumeration nodes
    int surveyor_max_iters = 50;
    double surveyor_tol = 1e-6;    // stop when the area gain falls below this
    double surveyor_damping = 0.5; // step shrink factor when a full step fails
    double loss_guard_eps = 5e-3;  // uniform floor of the fictitious-loss guard
};

/// Chosen binary pattern for one battery replica.
struct BinaryFixing {
    int battery = 0;
    int h = 0;
    int t = 0;
    int uc = 0;
    int ud = 0;
};

struct SolveStats {
    int iterations = 0;      // interior-point iterations (total across nodes)
    int nodes = 0;           // binary enumeration nodes explored
    double wall_seconds = 0.0;
};

struct Solution {
    SolveStatus status = SolveStatus::Infeasible;
    std::vector<double> assignment;  // one value per model column
    double objective = 0.0;          // value of the maximized objective
    std::vector<BinaryFixing> binary_fixing;
    SolveStats stats;
    double max_violation = 0.0;      // independent residual sweep over all rows
    std::string diagnostic;          // populated on infeasibility / failure

    bool feasible() const {
        return status == SolveStatus::Optimal || status == SolveStatus::Feasible;
    }
};

struct SolveRequest {
    const model::OptimizationModel* model = nullptr;
    Objective objective;  // maximize; empty = feasibility problem
    /// Hard variable fixings applied on top of the model bounds.
    std::vector<std::pair<int, double>> pins;
    /// Additional linear rows (directional floors, scenario pins).
    std::vector<model::LinearRow> extra_rows;
    /// Accepted for interface compatibility; used only to seed the binary
    /// pattern in solve_with_binaries.
    std::optional<std::vector<BinaryFixing>> warm_start;
    SolverOptions options;
};

/// Solve the convex relaxation (cone + linear rows; binary pairs relaxed to
/// their boxes). Status Optimal/Feasible guarantees the residual sweep over
/// every row, bound and cone passed at options.feas_tol.
Solution solve_conic(const SolveRequest& req);

/// Exact over the binary space: depth-first search over charge/discharge
/// patterns, branching on violated complementarity pairs in chronological
/// order (charge branch first) and pruning with the convex relaxation bound.
/// A relaxed solution that is already complementary is accepted without
/// branching.
Solution solve_with_binaries(const SolveRequest& req);

/// Successive convexification of the polygon-area objective starting from a
/// feasible iterate: each pass maximizes the first-order expansion of the
/// shoelace sum around the current vertices, with step damping and a
/// monotone (best-iterate) audited area. Binary patterns are frozen to
/// init's fixing. Returns the best iterate found.
Solution maximize_surveyor(const SolveRequest& req, const Solution& init);

/// One (h,t) slice of an assignment in network terms.
struct Dispatch {
    std::vector<double> v;   // per bus index, voltage magnitude squared
    std::vector<double> l;   // per line, current magnitude squared
    std::vector<double> fp;  // per line, sending-end active flow
    std::vector<double> fq;  // per line, sending-end reactive flow
    std::vector<double> pg;  // per generator
    std::vector<double> qg;
    std::vector<double> pc;  // per battery
    std::vector<double> pd;
    std::vector<double> e;
    double p_pcc = 0.0;
    double q_pcc = 0.0;
};

Dispatch extract_dispatch(const model::OptimizationModel& m, std::span<const double> assignment,
                          int h, int t);

/// Objective that maximizes the negated total squared current: a pure
/// loss-minimization used to tighten cone relaxations and recover physical
/// witnesses.
Objective loss_minimization_objective(const model::OptimizationModel& m);

/// Fictitious-loss guard: for every replica whose interface variables carry
/// objective weight (cp, cq), each squared-current column gets the penalty
/// max(0, cp*r + cq*x) + eps-floor. An unguarded objective rewards inflating
/// l beyond the cone surface whenever cp*r + cq*x > 0 (losses fake extra
/// import), which would push boundary points outside the physically exact
/// region; the guard makes such inflation strictly unprofitable while
/// leaving lossless configurations untouched.
void add_loss_guard(const model::OptimizationModel& m, Objective& objective, double eps);

/// Pins realizing a binary fixing: a disabled state forces its power to 0.
std::vector<std::pair<int, double>> fixing_pins(const model::OptimizationModel& m,
                                                const std::vector<BinaryFixing>& fixing);

/// Max violation of all model rows, bounds, cones and extra rows at x.
double residual_sweep(const model::OptimizationModel& m,
                      const std::vector<model::LinearRow>& extra_rows,
                      std::span<const double> x);

}  // namespace flex::solve
