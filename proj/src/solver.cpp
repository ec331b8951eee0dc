#include "flex/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "flex/geometry.hpp"

namespace flex::solve {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEqualBoundEps = 1e-12;

using model::OptimizationModel;
using model::RowFamily;
using model::VarKind;

struct RowOrigin {
    enum class Kind : std::uint8_t { ModelRow, ExtraRow, PinCol, BoundLo, BoundUp, Cone };
    Kind kind;
    int index;
};

std::string describe_origin(const OptimizationModel& m,
                            const std::vector<model::LinearRow>& extras, RowOrigin origin) {
    std::ostringstream os;
    switch (origin.kind) {
        case RowOrigin::Kind::ModelRow: {
            const model::LinearRow& row = m.rows[static_cast<std::size_t>(origin.index)];
            os << family_name(row.family) << "." << row.element << "[h" << row.h << ",t" << row.t
               << "]";
            break;
        }
        case RowOrigin::Kind::ExtraRow: {
            const model::LinearRow& row = extras[static_cast<std::size_t>(origin.index)];
            os << family_name(row.family) << "[h" << row.h << ",t" << row.t << "]";
            break;
        }
        case RowOrigin::Kind::PinCol:
        case RowOrigin::Kind::BoundLo:
        case RowOrigin::Kind::BoundUp: {
            const model::VariableRef ref = m.ref_of(origin.index);
            os << (origin.kind == RowOrigin::Kind::PinCol
                       ? "pin "
                       : (origin.kind == RowOrigin::Kind::BoundLo ? "lower bound " : "upper bound "))
               << kind_name(ref.kind) << "." << ref.element << "[h" << ref.h << ",t" << ref.t
               << "]";
            break;
        }
        case RowOrigin::Kind::Cone: {
            const model::ConeRecord& cr = m.cones[static_cast<std::size_t>(origin.index)];
            os << "cone line." << cr.line << "[h" << cr.h << ",t" << cr.t << "]";
            break;
        }
    }
    return os.str();
}

struct Mapped {
    conic::ConeProblem cp;
    std::vector<RowOrigin> a_origin;
    std::vector<RowOrigin> g_origin;  // LP rows only; cones appended after
};

Mapped map_to_cone_form(const SolveRequest& req) {
    const OptimizationModel& m = *req.model;
    const int n = m.num_vars();

    std::vector<double> lb = m.lb;
    std::vector<double> ub = m.ub;
    std::vector<bool> pinned(static_cast<std::size_t>(n), false);
    for (const auto& [col, val] : req.pins) {
        lb[static_cast<std::size_t>(col)] = val;
        ub[static_cast<std::size_t>(col)] = val;
        pinned[static_cast<std::size_t>(col)] = true;
    }

    Mapped out;
    std::vector<Eigen::Triplet<double>> a_trip;
    std::vector<Eigen::Triplet<double>> g_trip;
    std::vector<double> b_vals;
    std::vector<double> h_vals;

    auto add_eq = [&](const std::vector<std::pair<int, double>>& coeffs, double rhs,
                      RowOrigin origin) {
        const int r = static_cast<int>(b_vals.size());
        for (const auto& [col, coef] : coeffs) a_trip.emplace_back(r, col, coef);
        b_vals.push_back(rhs);
        out.a_origin.push_back(origin);
    };
    auto add_le = [&](const std::vector<std::pair<int, double>>& coeffs, double rhs,
                      RowOrigin origin) {
        const int r = static_cast<int>(h_vals.size());
        for (const auto& [col, coef] : coeffs) g_trip.emplace_back(r, col, coef);
        h_vals.push_back(rhs);
        out.g_origin.push_back(origin);
    };
    auto add_row = [&](const model::LinearRow& row, RowOrigin origin) {
        if (row.is_equality()) {
            add_eq(row.coeffs, row.lo, origin);
            return;
        }
        if (row.hi < kInf) add_le(row.coeffs, row.hi, origin);
        if (row.lo > -kInf) {
            std::vector<std::pair<int, double>> neg = row.coeffs;
            for (auto& [col, coef] : neg) coef = -coef;
            add_le(neg, -row.lo, origin);
        }
    };

    for (std::size_t i = 0; i < m.rows.size(); ++i) {
        add_row(m.rows[i], {RowOrigin::Kind::ModelRow, static_cast<int>(i)});
    }
    for (std::size_t i = 0; i < req.extra_rows.size(); ++i) {
        add_row(req.extra_rows[i], {RowOrigin::Kind::ExtraRow, static_cast<int>(i)});
    }

    for (int col = 0; col < n; ++col) {
        const double lo = lb[static_cast<std::size_t>(col)];
        const double hi = ub[static_cast<std::size_t>(col)];
        if (hi - lo <= kEqualBoundEps) {
            // Fixed variables go in as equalities so the cone keeps a
            // strict interior.
            add_eq({{col, 1.0}}, 0.5 * (lo + hi), {RowOrigin::Kind::PinCol, col});
            continue;
        }
        if (hi < kInf) add_le({{col, 1.0}}, hi, {RowOrigin::Kind::BoundUp, col});
        if (lo > -kInf) {
            // The cone relation already enforces l >= 0.
            if (!(lo == 0.0 && m.ref_of(col).kind == VarKind::CurrentSq)) {
                add_le({{col, -1.0}}, -lo, {RowOrigin::Kind::BoundLo, col});
            }
        }
    }

    const int n_lp = static_cast<int>(h_vals.size());

    // Rotated cone p^2 + q^2 <= l*v as a standard second-order cone:
    // (l + v, l - v, 2p, 2q).
    for (const model::ConeRecord& cr : m.cones) {
        const int r = static_cast<int>(h_vals.size());
        g_trip.emplace_back(r, cr.l_col, -1.0);
        g_trip.emplace_back(r, cr.v_col, -1.0);
        g_trip.emplace_back(r + 1, cr.l_col, -1.0);
        g_trip.emplace_back(r + 1, cr.v_col, 1.0);
        g_trip.emplace_back(r + 2, cr.p_col, -2.0);
        g_trip.emplace_back(r + 3, cr.q_col, -2.0);
        h_vals.insert(h_vals.end(), {0.0, 0.0, 0.0, 0.0});
    }

    conic::ConeProblem& cp = out.cp;
    cp.n = n;
    cp.n_lp = n_lp;
    cp.soc_dims.assign(m.cones.size(), 4);
    cp.A.resize(static_cast<int>(b_vals.size()), n);
    cp.A.setFromTriplets(a_trip.begin(), a_trip.end());
    cp.G.resize(static_cast<int>(h_vals.size()), n);
    cp.G.setFromTriplets(g_trip.begin(), g_trip.end());
    cp.b = Eigen::Map<Eigen::VectorXd>(b_vals.data(), static_cast<int>(b_vals.size()));
    cp.h = Eigen::Map<Eigen::VectorXd>(h_vals.data(), static_cast<int>(h_vals.size()));
    cp.c.setZero(n);
    for (const auto& [col, coef] : req.objective) cp.c(col) -= coef;  // maximize
    return out;
}

double sweep_with_pins(const OptimizationModel& m,
                       const std::vector<model::LinearRow>& extras,
                       const std::vector<std::pair<int, double>>& pins,
                       std::span<const double> x) {
    double worst = 0.0;
    auto row_violation = [&](const model::LinearRow& row) {
        double val = 0.0;
        for (const auto& [col, coef] : row.coeffs) val += coef * x[static_cast<std::size_t>(col)];
        if (row.hi < kInf) worst = std::max(worst, val - row.hi);
        if (row.lo > -kInf) worst = std::max(worst, row.lo - val);
    };
    for (const model::LinearRow& row : m.rows) row_violation(row);
    for (const model::LinearRow& row : extras) row_violation(row);
    for (int col = 0; col < m.num_vars(); ++col) {
        const double v = x[static_cast<std::size_t>(col)];
        if (m.ub[static_cast<std::size_t>(col)] < kInf) {
            worst = std::max(worst, v - m.ub[static_cast<std::size_t>(col)]);
        }
        if (m.lb[static_cast<std::size_t>(col)] > -kInf) {
            worst = std::max(worst, m.lb[static_cast<std::size_t>(col)] - v);
        }
    }
    for (const auto& [col, val] : pins) {
        worst = std::max(worst, std::abs(x[static_cast<std::size_t>(col)] - val));
    }
    for (const model::ConeRecord& cr : m.cones) {
        const double l = x[static_cast<std::size_t>(cr.l_col)];
        const double v = x[static_cast<std::size_t>(cr.v_col)];
        const double p = x[static_cast<std::size_t>(cr.p_col)];
        const double q = x[static_cast<std::size_t>(cr.q_col)];
        worst = std::max(worst, p * p + q * q - l * v);
    }
    return worst;
}

std::vector<BinaryFixing> derive_fixing(const OptimizationModel& m, std::span<const double> x,
                                        double tol) {
    std::vector<BinaryFixing> fixing;
    fixing.reserve(m.binaries.size());
    for (const model::BinaryPair& bp : m.binaries) {
        const double pc = x[static_cast<std::size_t>(bp.pc_col)];
        const double pd = x[static_cast<std::size_t>(bp.pd_col)];
        fixing.push_back(BinaryFixing{bp.battery, bp.h, bp.t, pc > tol ? 1 : 0, pd > tol ? 1 : 0});
    }
    return fixing;
}

bool complementary(const OptimizationModel& m, std::span<const double> x, double tol,
                   std::size_t* violated_pair) {
    for (std::size_t i = 0; i < m.binaries.size(); ++i) {
        const double pc = x[static_cast<std::size_t>(m.binaries[i].pc_col)];
        const double pd = x[static_cast<std::size_t>(m.binaries[i].pd_col)];
        if (std::min(pc, pd) > tol) {
            if (violated_pair) *violated_pair = i;
            return false;
        }
    }
    return true;
}

// Simultaneous charge/discharge on a degenerate optimal face can be netted
// out without touching flows or the objective: keep each replica's net
// injection, recompute the energy chain, and accept if the stored energy
// stays within bounds. Returns false when netting would overfill a battery
// (then the search has to branch for real).
bool net_out_burning(const OptimizationModel& m, std::vector<double>& x) {
    const auto& bats = m.network.batteries;
    const double dt = m.network.demand.dt;
    std::vector<double> trial = x;
    for (int b = 0; b < static_cast<int>(bats.size()); ++b) {
        const net::Battery& bat = bats[static_cast<std::size_t>(b)];
        for (int h = 0; h < m.H; ++h) {
            double prev = bat.e0;
            for (int t = 0; t < m.T; ++t) {
                if (m.options.independent_periods) prev = bat.e0;
                const std::size_t cc =
                    static_cast<std::size_t>(m.col(VarKind::BatCharge, b, h, t));
                const std::size_t cd =
                    static_cast<std::size_t>(m.col(VarKind::BatDischarge, b, h, t));
                const std::size_t ce =
                    static_cast<std::size_t>(m.col(VarKind::BatEnergy, b, h, t));
                const double net_power = trial[cc] - trial[cd];
                trial[cc] = std::max(net_power, 0.0);
                trial[cd] = std::max(-net_power, 0.0);
                const double e =
                    prev + (bat.eta_c * trial[cc] - trial[cd] / bat.eta_d) * dt;
                if (e < -1e-12 || e > bat.emax + 1e-12) return false;
                trial[ce] = std::clamp(e, 0.0, bat.emax);
                prev = trial[ce];
            }
        }
    }
    x = std::move(trial);
    return true;
}

}  // namespace

const char* status_name(SolveStatus s) {
    switch (s) {
        case SolveStatus::Optimal: return "optimal";
        case SolveStatus::Feasible: return "feasible";
        case SolveStatus::Infeasible: return "infeasible";
        case SolveStatus::IterationLimit: return "iteration-limit";
    }
    return "?";
}

Solution solve_conic(const SolveRequest& req) {
    const auto t0 = std::chrono::steady_clock::now();
    const OptimizationModel& m = *req.model;

    Mapped mapped = map_to_cone_form(req);
    conic::ConeSettings cone_settings;
    cone_settings.max_iters = req.options.max_iters;
    conic::ConeSolution cs = conic::solve_cone_program(mapped.cp, cone_settings);

    Solution sol;
    sol.stats.iterations = cs.iterations;
    sol.assignment.assign(cs.x.data(), cs.x.data() + cs.x.size());

    switch (cs.status) {
        case conic::ConeStatus::Optimal:
            sol.status = SolveStatus::Optimal;
            break;
        case conic::ConeStatus::AlmostOptimal:
            sol.status = SolveStatus::Feasible;
            break;
        case conic::ConeStatus::PrimalInfeasible: {
            sol.status = SolveStatus::Infeasible;
            // Name the dominant row of the Farkas certificate.
            double best = -1.0;
            RowOrigin origin{RowOrigin::Kind::ModelRow, 0};
            for (int i = 0; i < cs.y.size(); ++i) {
                if (std::abs(cs.y(i)) > best) {
                    best = std::abs(cs.y(i));
                    origin = mapped.a_origin[static_cast<std::size_t>(i)];
                }
            }
            for (int i = 0; i < static_cast<int>(mapped.g_origin.size()); ++i) {
                if (cs.z(i) > best) {
                    best = cs.z(i);
                    origin = mapped.g_origin[static_cast<std::size_t>(i)];
                }
            }
            sol.diagnostic = "infeasible; dominant certificate row: " +
                             describe_origin(m, req.extra_rows, origin);
            sol.assignment.assign(static_cast<std::size_t>(m.num_vars()), 0.0);
            break;
        }
        case conic::ConeStatus::DualInfeasible:
            sol.status = SolveStatus::IterationLimit;
            sol.diagnostic = "objective unbounded over the feasible set";
            break;
        default:
            sol.status = SolveStatus::IterationLimit;
            sol.diagnostic = std::string("interior-point method stopped: ") +
                             conic::status_name(cs.status);
            break;
    }

    if (sol.status == SolveStatus::Optimal || sol.status == SolveStatus::Feasible) {
        sol.objective = -cs.objective;  // the cone program minimizes the negation
        sol.max_violation = sweep_with_pins(m, req.extra_rows, req.pins, sol.assignment);
        if (sol.max_violation > req.options.feas_tol) {
            sol.status = SolveStatus::IterationLimit;
            std::ostringstream os;
            os << "residual sweep failed: max violation " << sol.max_violation;
            sol.diagnostic = os.str();
        } else if (complementary(m, sol.assignment, req.options.comp_tol, nullptr)) {
            sol.binary_fixing = derive_fixing(m, sol.assignment, req.options.comp_tol);
        }
    }

    sol.stats.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return sol;
}

std::vector<std::pair<int, double>> fixing_pins(const model::OptimizationModel& m,
                                                const std::vector<BinaryFixing>& fixing) {
    std::vector<std::pair<int, double>> pins;
    for (const BinaryFixing& f : fixing) {
        const model::BinaryPair* pair = nullptr;
        for (const model::BinaryPair& bp : m.binaries) {
            if (bp.battery == f.battery && bp.h == f.h && bp.t == f.t) {
                pair = &bp;
                break;
            }
        }
        if (pair == nullptr) throw std::invalid_argument("fixing_pins: unknown battery replica");
        if (f.uc == 0) pins.emplace_back(pair->pc_col, 0.0);
        if (f.ud == 0) pins.emplace_back(pair->pd_col, 0.0);
    }
    return pins;
}

Solution solve_with_binaries(const SolveRequest& req) {
    const auto t0 = std::chrono::steady_clock::now();
    const OptimizationModel& m = *req.model;
    if (m.binaries.empty()) {
        return solve_conic(req);
    }

    const double comp_tol = req.options.comp_tol;
    Solution incumbent;
    incumbent.status = SolveStatus::Infeasible;
    double incumbent_obj = -kInf;
    int nodes = 0;
    int total_iters = 0;
    bool node_cap_hit = false;
    bool solver_trouble = false;
    std::string root_diag;

    // Seed the incumbent from a caller-provided pattern so pruning starts
    // with a bound.
    if (req.warm_start && !req.warm_start->empty()) {
        SolveRequest warm = req;
        auto pins = fixing_pins(m, *req.warm_start);
        warm.pins.insert(warm.pins.end(), pins.begin(), pins.end());
        Solution sol = solve_conic(warm);
        ++nodes;
        total_iters += sol.stats.iterations;
        if (sol.feasible() && complementary(m, sol.assignment, comp_tol, nullptr)) {
            sol.binary_fixing = derive_fixing(m, sol.assignment, comp_tol);
            incumbent = std::move(sol);
            incumbent_obj = incumbent.objective;
        }
    }

    // Depth-first over charge/discharge dichotomies. A node is a list of
    // forced-zero columns; each branch resolves one violated pair.
    std::function<void(std::vector<std::pair<int, double>>&)> explore =
        [&](std::vector<std::pair<int, double>>& forced) {
            if (nodes >= req.options.max_nodes) {
                node_cap_hit = true;
                return;
            }
            SolveRequest node_req = req;
            node_req.pins.insert(node_req.pins.end(), forced.begin(), forced.end());
            Solution sol = solve_conic(node_req);
            ++nodes;
            total_iters += sol.stats.iterations;
            if (sol.status == SolveStatus::Infeasible) {
                if (forced.empty()) root_diag = sol.diagnostic;
                return;
            }
            if (!sol.feasible()) {
                solver_trouble = true;  // numerics: subtree left unexplored
                if (forced.empty()) root_diag = sol.diagnostic;
                return;
            }
            if (sol.objective <= incumbent_obj + 1e-9) return;  // bound prune

            std::size_t violated = 0;
            if (!complementary(m, sol.assignment, comp_tol, &violated) &&
                net_out_burning(m, sol.assignment)) {
                sol.max_violation = sweep_with_pins(m, req.extra_rows, node_req.pins,
                                                    sol.assignment);
            }
            if (complementary(m, sol.assignment, comp_tol, &violated) &&
                sol.max_violation <= req.options.feas_tol) {
                sol.binary_fixing = derive_fixing(m, sol.assignment, comp_tol);
                incumbent = std::move(sol);
                incumbent_obj = incumbent.objective;
                return;
            }

            // Chronological selection: first violated pair in (t, h, battery)
            // order; the binaries vector is already sorted that way per
            // battery, so pick the minimum explicitly.
            std::size_t chosen = violated;
            for (std::size_t i = 0; i < m.binaries.size(); ++i) {
                const auto& bp = m.binaries[i];
                const double pc = sol.assignment[static_cast<std::size_t>(bp.pc_col)];
                const double pd = sol.assignment[static_cast<std::size_t>(bp.pd_col)];
                if (std::min(pc, pd) <= comp_tol) continue;
                const auto& cur = m.binaries[chosen];
                if (std::tie(bp.t, bp.h, bp.battery) < std::tie(cur.t, cur.h, cur.battery)) {
                    chosen = i;
                }
            }
            const model::BinaryPair& bp = m.binaries[chosen];

            // Charge branch first: discharging is forced off.
            forced.emplace_back(bp.pd_col, 0.0);
            explore(forced);
            forced.pop_back();
            forced.emplace_back(bp.pc_col, 0.0);
            explore(forced);
            forced.pop_back();
        };

    std::vector<std::pair<int, double>> forced;
    explore(forced);

    if (!incumbent.feasible()) {
        // Distinguish a proven-infeasible tree from one the solver could
        // not finish exploring.
        incumbent.status = (node_cap_hit || solver_trouble) ? SolveStatus::IterationLimit
                                                            : SolveStatus::Infeasible;
        incumbent.diagnostic =
            node_cap_hit ? "binary enumeration node cap reached without an incumbent"
                         : (root_diag.empty() ? "infeasible for every binary pattern"
                                              : root_diag);
        incumbent.assignment.assign(static_cast<std::size_t>(m.num_vars()), 0.0);
    } else if (node_cap_hit) {
        incumbent.diagnostic = "binary enumeration node cap reached; best incumbent returned";
    }
    incumbent.stats.nodes = nodes;
    incumbent.stats.iterations = total_iters;
    incumbent.stats.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return incumbent;
}

namespace {

double period_area(const OptimizationModel& m, std::span<const double> x, int t) {
    geometry::Polygon poly;
    poly.vertices.reserve(static_cast<std::size_t>(m.H));
    for (int h = 0; h < m.H; ++h) {
        poly.vertices.push_back({x[static_cast<std::size_t>(m.pcc_p(h, t))],
                                 x[static_cast<std::size_t>(m.pcc_q(h, t))]});
    }
    return geometry::shoelace(poly);
}

}  // namespace

Solution maximize_surveyor(const SolveRequest& req, const Solution& init) {
    const auto t0 = std::chrono::steady_clock::now();
    const OptimizationModel& m = *req.model;
    if (m.H < 3) throw std::invalid_argument("maximize_surveyor: H must be at least 3");
    if (!init.feasible() || init.assignment.size() != static_cast<std::size_t>(m.num_vars())) {
        throw std::invalid_argument("maximize_surveyor: initial iterate is not feasible");
    }

    SolveRequest inner = req;
    {
        auto pins = fixing_pins(m, init.binary_fixing);
        inner.pins.insert(inner.pins.end(), pins.begin(), pins.end());
    }

    std::vector<double> current = init.assignment;
    std::vector<double> floor_area(static_cast<std::size_t>(m.T));
    double best_total = 0.0;
    for (int t = 0; t < m.T; ++t) {
        floor_area[static_cast<std::size_t>(t)] = period_area(m, current, t) - 1e-9;
        best_total += period_area(m, current, t);
    }

    int iters = 0;
    int total_ipm_iters = init.stats.iterations;
    for (; iters < req.options.surveyor_max_iters; ++iters) {
        // First-order expansion of the shoelace sum around the current
        // vertices: the gradient rotates each vertex's neighbors.
        inner.objective.clear();
        for (int t = 0; t < m.T; ++t) {
            for (int h = 0; h < m.H; ++h) {
                const int h_prev = (h + m.H - 1) % m.H;
                const int h_next = (h + 1) % m.H;
                const double q_next = current[static_cast<std::size_t>(m.pcc_q(h_next, t))];
                const double q_prev = current[static_cast<std::size_t>(m.pcc_q(h_prev, t))];
                const double p_next = current[static_cast<std::size_t>(m.pcc_p(h_next, t))];
                const double p_prev = current[static_cast<std::size_t>(m.pcc_p(h_prev, t))];
                inner.objective.emplace_back(m.pcc_p(h, t), q_next - q_prev);
                inner.objective.emplace_back(m.pcc_q(h, t), p_prev - p_next);
            }
        }
        add_loss_guard(m, inner.objective, req.options.loss_guard_eps);

        Solution step = solve_conic(inner);
        total_ipm_iters += step.stats.iterations;
        if (!step.feasible()) break;

        // Damped step; both end points are feasible for the convex
        // relaxation, hence so is every blend.
        bool accepted = false;
        double gain = 0.0;
        std::vector<double> trial(current.size());
        double gamma = 1.0;
        for (int attempt = 0; attempt < 7; ++attempt) {
            for (std::size_t i = 0; i < current.size(); ++i) {
                trial[i] = current[i] + gamma * (step.assignment[i] - current[i]);
            }
            double total = 0.0;
            bool floors_ok = true;
            for (int t = 0; t < m.T; ++t) {
                const double at = period_area(m, trial, t);
                total += at;
                floors_ok = floors_ok && at >= floor_area[static_cast<std::size_t>(t)];
            }
            if (floors_ok && total > best_total) {
                accepted = true;
                gain = total - best_total;
                best_total = total;
                current = trial;
                break;
            }
            gamma *= req.options.surveyor_damping;
        }
        if (!accepted || gain < req.options.surveyor_tol) {
            if (accepted) ++iters;
            break;
        }
    }

    Solution out;
    out.status = SolveStatus::Optimal;
    out.assignment = std::move(current);
    out.objective = best_total;
    out.binary_fixing = init.binary_fixing;
    out.max_violation = sweep_with_pins(m, req.extra_rows, inner.pins, out.assignment);
    out.stats.iterations = total_ipm_iters;
    out.stats.nodes = iters;
    out.stats.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

Dispatch extract_dispatch(const model::OptimizationModel& m, std::span<const double> x, int h,
                          int t) {
    const auto& net = m.network;
    const int nb = static_cast<int>(net.buses.size());
    const int nl = static_cast<int>(net.lines.size());
    const int ng = static_cast<int>(net.generators.size());
    const int nbat = m.options.with_batteries ? static_cast<int>(net.batteries.size()) : 0;

    Dispatch d;
    auto grab = [&](VarKind kind, int count, std::vector<double>& out) {
        out.resize(static_cast<std::size_t>(count));
        for (int i = 0; i < count; ++i) {
            out[static_cast<std::size_t>(i)] = x[static_cast<std::size_t>(m.col(kind, i, h, t))];
        }
    };
    grab(VarKind::VoltageSq, nb, d.v);
    grab(VarKind::CurrentSq, nl, d.l);
    grab(VarKind::FlowP, nl, d.fp);
    grab(VarKind::FlowQ, nl, d.fq);
    grab(VarKind::GenP, ng, d.pg);
    grab(VarKind::GenQ, ng, d.qg);
    grab(VarKind::BatCharge, nbat, d.pc);
    grab(VarKind::BatDischarge, nbat, d.pd);
    grab(VarKind::BatEnergy, nbat, d.e);
    d.p_pcc = x[static_cast<std::size_t>(m.pcc_p(h, t))];
    d.q_pcc = x[static_cast<std::size_t>(m.pcc_q(h, t))];
    return d;
}

Objective loss_minimization_objective(const model::OptimizationModel& m) {
    Objective obj;
    for (int t = 0; t < m.T; ++t) {
        for (int h = 0; h < m.H; ++h) {
            for (int e = 0; e < static_cast<int>(m.network.lines.size()); ++e) {
                obj.emplace_back(m.col(VarKind::CurrentSq, e, h, t), -1.0);
            }
        }
    }
    return obj;
}

void add_loss_guard(const model::OptimizationModel& m, Objective& objective, double eps) {
    // Collect the interface weights per replica.
    std::vector<double> cp(static_cast<std::size_t>(m.H * m.T), 0.0);
    std::vector<double> cq(static_cast<std::size_t>(m.H * m.T), 0.0);
    for (const auto& [col, coef] : objective) {
        const model::VariableRef ref = m.ref_of(col);
        const std::size_t replica = static_cast<std::size_t>(ref.t * m.H + ref.h);
        if (ref.kind == VarKind::PccP) cp[replica] += coef;
        if (ref.kind == VarKind::PccQ) cq[replica] += coef;
    }
    const int nl = static_cast<int>(m.network.lines.size());
    for (int t = 0; t < m.T; ++t) {
        for (int h = 0; h < m.H; ++h) {
            const std::size_t replica = static_cast<std::size_t>(t * m.H + h);
            const double scale = std::max(1.0, std::abs(cp[replica]) + std::abs(cq[replica]));
            for (int e = 0; e < nl; ++e) {
                const double gain = cp[replica] * m.line_r(e) + cq[replica] * m.line_x(e);
                const double guard = std::max(0.0, gain) + eps * scale;
                objective.emplace_back(m.col(VarKind::CurrentSq, e, h, t), -guard);
            }
        }
    }
}

double residual_sweep(const model::OptimizationModel& m,
                      const std::vector<model::LinearRow>& extra_rows,
                      std::span<const double> x) {
    return sweep_with_pins(m, extra_rows, {}, x);
}

}  // namespace flex::solve
