#include "flex/region.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>

namespace flex::region {

namespace {

using model::OptimizationModel;

solve::Objective directional_objective(const OptimizationModel& m, const DirectionSet& dirs) {
    solve::Objective obj;
    obj.reserve(static_cast<std::size_t>(2 * m.H * m.T));
    for (int t = 0; t < m.T; ++t) {
        for (int h = 0; h < m.H; ++h) {
            obj.emplace_back(m.pcc_p(h, t), std::cos(dirs.angles[static_cast<std::size_t>(h)]));
            obj.emplace_back(m.pcc_q(h, t), std::sin(dirs.angles[static_cast<std::size_t>(h)]));
        }
    }
    return obj;
}

std::vector<std::vector<Vertex>> read_vertices(const OptimizationModel& m,
                                               const DirectionSet& dirs,
                                               std::span<const double> x) {
    std::vector<std::vector<Vertex>> out(static_cast<std::size_t>(m.T));
    for (int t = 0; t < m.T; ++t) {
        auto& period = out[static_cast<std::size_t>(t)];
        period.resize(static_cast<std::size_t>(m.H));
        for (int h = 0; h < m.H; ++h) {
            period[static_cast<std::size_t>(h)] = {
                dirs.angles[static_cast<std::size_t>(h)],
                x[static_cast<std::size_t>(m.pcc_p(h, t))],
                x[static_cast<std::size_t>(m.pcc_q(h, t))]};
        }
    }
    return out;
}

/// Witness repair: the polygon is final, so both interface coordinates are
/// pinned per replica and a pure loss minimization recovers tight-cone
/// dispatches behind the vertices without moving them. Heavily degenerate
/// instances can leave the re-solve at reduced accuracy; the caller then
/// keeps the original assignment, so this is a best-effort polish with the
/// relaxation slack as the only cost of failure.
solve::Solution polish_witnesses(const OptimizationModel& m, const solve::Solution& base,
                                 const solve::SolverOptions& options) {
    solve::SolveRequest req;
    req.model = &m;
    req.options = options;
    req.objective = solve::loss_minimization_objective(m);
    req.pins = solve::fixing_pins(m, base.binary_fixing);
    for (int t = 0; t < m.T; ++t) {
        for (int h = 0; h < m.H; ++h) {
            req.pins.emplace_back(m.pcc_p(h, t),
                                  base.assignment[static_cast<std::size_t>(m.pcc_p(h, t))]);
            req.pins.emplace_back(m.pcc_q(h, t),
                                  base.assignment[static_cast<std::size_t>(m.pcc_q(h, t))]);
        }
    }
    solve::Solution repaired = solve::solve_conic(req);
    if (!repaired.feasible()) return base;

    // Keep whichever witness set leaves less slack in the audit records.
    auto max_gap = [&](const std::vector<double>& x) {
        double gap = 0.0;
        for (const model::ConeRecord& cr : m.cones) {
            const double l = x[static_cast<std::size_t>(cr.l_col)];
            const double v = x[static_cast<std::size_t>(cr.v_col)];
            const double p = x[static_cast<std::size_t>(cr.p_col)];
            const double q = x[static_cast<std::size_t>(cr.q_col)];
            gap = std::max(gap, l * v - (p * p + q * q));
        }
        return gap;
    };
    if (max_gap(repaired.assignment) >= max_gap(base.assignment)) return base;
    repaired.binary_fixing = base.binary_fixing;
    return repaired;
}

struct LinearStage {
    std::shared_ptr<OptimizationModel> model;
    DirectionSet dirs;
    solve::Solution solution;
    double linear_seconds = 0.0;
};

LinearStage run_linear_stage(const net::Network& net, const MapConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    LinearStage out;
    out.dirs = make_directions(cfg.H, cfg.offset);
    out.model = std::make_shared<OptimizationModel>(
        model::assemble(net, cfg.H, cfg.T, cfg.mode, cfg.model_options));

    // Feasibility pre-solve with a zero objective: rejects infeasible
    // nominal scenarios with a named diagnostic before any real work.
    {
        solve::SolveRequest pre;
        pre.model = out.model.get();
        pre.options = cfg.solver_options;
        solve::Solution sol = solve::solve_conic(pre);
        if (!sol.feasible()) {
            throw InfeasibleModel("nominal scenario failed the feasibility pre-solve: " +
                                  (sol.diagnostic.empty() ? std::string("solver failure")
                                                          : sol.diagnostic));
        }
    }

    // One monolithic solve over all (h,t). The guard keeps fictitious
    // losses unprofitable, so the replica values are boundary points of the
    // physically exact region.
    solve::SolveRequest req;
    req.model = out.model.get();
    req.options = cfg.solver_options;
    req.objective = directional_objective(*out.model, out.dirs);
    solve::add_loss_guard(*out.model, req.objective, cfg.solver_options.loss_guard_eps);
    out.solution = solve::solve_with_binaries(req);
    if (!out.solution.feasible()) {
        throw InfeasibleModel("directional solve failed: " + out.solution.diagnostic);
    }
    out.linear_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

}  // namespace

const char* objective_name(ObjectiveKind k) {
    return k == ObjectiveKind::Linear ? "linear" : "surveyor";
}

DirectionSet make_directions(int H, double offset) {
    if (H < 3) throw std::invalid_argument("make_directions: H must be at least 3");
    constexpr double two_pi = 2.0 * std::numbers::pi;
    DirectionSet out;
    out.angles.resize(static_cast<std::size_t>(H));
    for (int h = 0; h < H; ++h) {
        double a = std::fmod(offset + two_pi * h / H, two_pi);
        if (a < 0.0) a += two_pi;
        out.angles[static_cast<std::size_t>(h)] = a;
    }
    std::sort(out.angles.begin(), out.angles.end());
    for (std::size_t i = 1; i < out.angles.size(); ++i) {
        if (out.angles[i] - out.angles[i - 1] < 1e-12) {
            throw std::invalid_argument("make_directions: angles collapsed");
        }
    }
    return out;
}

geometry::Polygon FlexibilityMap::polygon(int t) const {
    geometry::Polygon poly;
    for (const Vertex& v : vertices.at(static_cast<std::size_t>(t))) {
        poly.vertices.push_back({v.p, v.q});
    }
    return poly;
}

double FlexibilityMap::area(int t) const { return geometry::shoelace(polygon(t)); }

double FlexibilityMap::total_area() const {
    double total = 0.0;
    for (int t = 0; t < T; ++t) total += area(t);
    return total;
}

FlexibilityMap solve_linear_map(const net::Network& net, const MapConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    LinearStage stage = run_linear_stage(net, cfg);

    const solve::Solution repaired =
        polish_witnesses(*stage.model, stage.solution, cfg.solver_options);

    FlexibilityMap map;
    map.objective = ObjectiveKind::Linear;
    map.mode = cfg.mode;
    map.H = cfg.H;
    map.T = cfg.T;
    map.offset = cfg.offset;
    map.directions = stage.dirs;
    map.model = stage.model;
    map.assignment = repaired.assignment;
    map.binary_fixing = stage.solution.binary_fixing;
    map.vertices = read_vertices(*stage.model, stage.dirs, map.assignment);
    map.stats.linear_wall_seconds = stage.linear_seconds;
    map.stats.ipm_iterations =
        stage.solution.stats.iterations + repaired.stats.iterations;
    map.stats.enumeration_nodes = stage.solution.stats.nodes;
    map.stats.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return map;
}

FlexibilityMap solve_surveyor_map(const net::Network& net, const MapConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    LinearStage stage = run_linear_stage(net, cfg);

    solve::SolveRequest req;
    req.model = stage.model.get();
    req.options = cfg.solver_options;
    solve::Solution refined = solve::maximize_surveyor(req, stage.solution);

    // Interpolated refinement steps can leave slack in the cones; repair the
    // witnesses behind the final polygon without moving it.
    const solve::Solution final_sol =
        polish_witnesses(*stage.model, refined, cfg.solver_options);

    FlexibilityMap map;
    map.objective = ObjectiveKind::Surveyor;
    map.mode = cfg.mode;
    map.H = cfg.H;
    map.T = cfg.T;
    map.offset = cfg.offset;
    map.directions = stage.dirs;
    map.model = stage.model;
    map.assignment = final_sol.assignment;
    map.binary_fixing = refined.binary_fixing;
    map.vertices = read_vertices(*stage.model, stage.dirs, map.assignment);
    map.stats.linear_wall_seconds = stage.linear_seconds;
    map.stats.ipm_iterations = stage.solution.stats.iterations + refined.stats.iterations +
                               final_sol.stats.iterations;
    map.stats.enumeration_nodes = stage.solution.stats.nodes;
    map.stats.surveyor_passes = refined.stats.nodes;
    map.stats.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return map;
}

solve::Dispatch extract_dispatch(const FlexibilityMap& map, int h, int t) {
    if (h < 0 || h >= map.H || t < 0 || t >= map.T) {
        throw std::out_of_range("extract_dispatch: (h,t) out of range");
    }
    return solve::extract_dispatch(*map.model, map.assignment, h, t);
}

}  // namespace flex::region
