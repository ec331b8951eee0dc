#include "flex/verify.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <sstream>

#include "parallel.hpp"
#include "rng.hpp"

namespace flex::verify {

namespace {

using model::OptimizationModel;
using solve::Dispatch;

struct Oriented {
    int parent_idx;  // bus index of the sending end
    int child_idx;
    int child_id;    // bus id of the receiving end
};

std::vector<Oriented> orient_lines(const OptimizationModel& m) {
    std::vector<Oriented> out(m.network.lines.size());
    for (const auto& [child, line] : m.radial.parent_line) {
        const int parent = m.radial.parent.at(child);
        out[static_cast<std::size_t>(line)] = {m.network.bus_index(parent),
                                               m.network.bus_index(child), child};
    }
    return out;
}

std::vector<std::vector<int>> children_of(const OptimizationModel& m,
                                          const std::vector<Oriented>& oriented) {
    std::vector<std::vector<int>> out(m.network.buses.size());
    for (std::size_t e = 0; e < oriented.size(); ++e) {
        out[static_cast<std::size_t>(oriented[e].parent_idx)].push_back(static_cast<int>(e));
    }
    return out;
}

}  // namespace

ResidualReport check_residuals(const OptimizationModel& m, std::span<const double> x,
                               double tol) {
    const net::Network& net = m.network;
    const std::vector<Oriented> oriented = orient_lines(m);
    const std::vector<std::vector<int>> kids = children_of(m, oriented);
    const int pcc_idx = net.bus_index(net.pcc_bus());

    ResidualReport report;
    report.tol = tol;
    auto bump = [&](const char* family, double violation) {
        double& slot = report.family_max[family];
        slot = std::max(slot, violation);
        report.max_any = std::max(report.max_any, violation);
    };

    for (int t = 0; t < m.T; ++t) {
        for (int h = 0; h < m.H; ++h) {
            const Dispatch d = solve::extract_dispatch(m, x, h, t);

            for (std::size_t e = 0; e < net.lines.size(); ++e) {
                const double r = m.line_r(static_cast<int>(e));
                const double xx = m.line_x(static_cast<int>(e));
                const Oriented& o = oriented[e];

                double p_expected = net.demand.p_at(o.child_id, t) + r * d.l[e];
                double q_expected = net.demand.q_at(o.child_id, t) + xx * d.l[e];
                for (int k : kids[static_cast<std::size_t>(o.child_idx)]) {
                    p_expected += d.fp[static_cast<std::size_t>(k)];
                    q_expected += d.fq[static_cast<std::size_t>(k)];
                }
                for (std::size_t g = 0; g < net.generators.size(); ++g) {
                    if (net.generators[g].bus != o.child_id) continue;
                    p_expected -= d.pg[g];
                    q_expected -= d.qg[g];
                }
                for (std::size_t b = 0; b < d.pc.size(); ++b) {
                    if (net.batteries[b].bus != o.child_id) continue;
                    p_expected += d.pc[b] - d.pd[b];
                }
                bump("active_balance", std::abs(d.fp[e] - p_expected));
                bump("reactive_balance", std::abs(d.fq[e] - q_expected));

                const double v_expected =
                    d.v[static_cast<std::size_t>(o.parent_idx)] -
                    2.0 * (r * d.fp[e] + xx * d.fq[e]) + (r * r + xx * xx) * d.l[e];
                bump("voltage_drop", std::abs(d.v[static_cast<std::size_t>(o.child_idx)] -
                                              v_expected));

                bump("cone", d.fp[e] * d.fp[e] + d.fq[e] * d.fq[e] -
                                 d.l[e] * d.v[static_cast<std::size_t>(o.parent_idx)]);
                bump("current_limits", -d.l[e]);
                if (m.options.network_limits) {
                    bump("current_limits", d.l[e] - net.lines[e].imax_sq);
                }
            }

            double p_out = 0.0, q_out = 0.0;
            for (int k : kids[static_cast<std::size_t>(pcc_idx)]) {
                p_out += d.fp[static_cast<std::size_t>(k)];
                q_out += d.fq[static_cast<std::size_t>(k)];
            }
            bump("pcc_definition", std::abs(d.p_pcc - p_out));
            bump("pcc_definition", std::abs(d.q_pcc - q_out));
            bump("pcc_voltage", std::abs(d.v[static_cast<std::size_t>(pcc_idx)] - 1.0));

            if (m.options.network_limits) {
                for (std::size_t i = 0; i < net.buses.size(); ++i) {
                    if (static_cast<int>(i) == pcc_idx) continue;
                    bump("voltage_bounds", net.buses[i].vmin_sq - d.v[i]);
                    bump("voltage_bounds", d.v[i] - net.buses[i].vmax_sq);
                }
            }
            for (std::size_t g = 0; g < net.generators.size(); ++g) {
                bump("generator_bounds", net.generators[g].pmin - d.pg[g]);
                bump("generator_bounds", d.pg[g] - net.generators[g].pmax);
                bump("generator_bounds", net.generators[g].qmin - d.qg[g]);
                bump("generator_bounds", d.qg[g] - net.generators[g].qmax);
            }
            for (std::size_t b = 0; b < d.pc.size(); ++b) {
                const net::Battery& bat = net.batteries[b];
                bump("battery_bounds", -d.pc[b]);
                bump("battery_bounds", d.pc[b] - bat.pc_max);
                bump("battery_bounds", -d.pd[b]);
                bump("battery_bounds", d.pd[b] - bat.pd_max);
                bump("battery_bounds", -d.e[b]);
                bump("battery_bounds", d.e[b] - bat.emax);

                const double prev =
                    (t == 0 || m.options.independent_periods)
                        ? bat.e0
                        : x[static_cast<std::size_t>(
                              m.col(model::VarKind::BatEnergy, static_cast<int>(b), h, t - 1))];
                const double expected =
                    prev + (bat.eta_c * d.pc[b] - d.pd[b] / bat.eta_d) * net.demand.dt;
                bump("battery_soc", std::abs(d.e[b] - expected));
            }
        }
    }

    // Ramp rows couple consecutive periods under the model's pairing mode.
    if (m.options.with_ramps && !m.options.independent_periods && m.T >= 2) {
        for (std::size_t g = 0; g < net.generators.size(); ++g) {
            const double rup = model::effective_ramp_up(net.generators[g], m.options);
            const double rdn = model::effective_ramp_dn(net.generators[g], m.options);
            for (int t = 0; t + 1 < m.T; ++t) {
                for (int h_next = 0; h_next < m.H; ++h_next) {
                    const int lo = m.mode == model::CouplingMode::SameIndex ? h_next : 0;
                    const int hi = m.mode == model::CouplingMode::SameIndex ? h_next + 1 : m.H;
                    for (int h_prev = lo; h_prev < hi; ++h_prev) {
                        const double delta =
                            x[static_cast<std::size_t>(
                                m.col(model::VarKind::GenP, static_cast<int>(g), h_next, t + 1))] -
                            x[static_cast<std::size_t>(
                                m.col(model::VarKind::GenP, static_cast<int>(g), h_prev, t))];
                        bump("ramp", delta - rup);
                        bump("ramp", -rdn - delta);
                    }
                }
            }
        }
    }
    return report;
}

double relaxation_gap(const OptimizationModel& m, std::span<const double> x) {
    double gap = 0.0;
    for (const model::ConeRecord& cr : m.cones) {
        const double l = x[static_cast<std::size_t>(cr.l_col)];
        const double v = x[static_cast<std::size_t>(cr.v_col)];
        const double p = x[static_cast<std::size_t>(cr.p_col)];
        const double q = x[static_cast<std::size_t>(cr.q_col)];
        gap = std::max(gap, l * v - (p * p + q * q));
    }
    return gap;
}

OracleResult feasibility_oracle(const net::Network& net,
                                const std::vector<geometry::Point>& pcc_path,
                                const model::ModelOptions& options, model::CouplingMode mode,
                                const solve::SolverOptions& solver, double path_band) {
    OracleResult out;
    const int T = static_cast<int>(pcc_path.size());
    if (T < 1 || T > net.demand.horizon()) {
        throw std::invalid_argument("feasibility_oracle: path length must be in [1, horizon]");
    }

    const OptimizationModel m = model::assemble_unchecked(net, 1, T, mode, options);
    solve::SolveRequest req;
    req.model = &m;
    req.options = solver;
    req.objective = solve::loss_minimization_objective(m);
    const double band = path_band;
    for (int t = 0; t < T; ++t) {
        for (const auto [col, value] :
             {std::pair{m.pcc_p(0, t), pcc_path[static_cast<std::size_t>(t)].p},
              std::pair{m.pcc_q(0, t), pcc_path[static_cast<std::size_t>(t)].q}}) {
            model::LinearRow row{model::RowFamily::Pin, 0, 0, t, {}, 0.0, 0.0};
            row.coeffs.emplace_back(col, 1.0);
            row.lo = value - band;
            row.hi = value + band;
            req.extra_rows.push_back(std::move(row));
        }
    }

    solve::Solution sol = solve::solve_with_binaries(req);
    if (sol.status == solve::SolveStatus::Infeasible) {
        out.feasible = false;
        out.diagnostic = sol.diagnostic;
    } else if (!sol.feasible()) {
        out.feasible = false;
        out.solver_failure = true;
        out.diagnostic = sol.diagnostic;
    } else {
        out.feasible = true;
        out.witness_gap = relaxation_gap(m, sol.assignment);
        out.witness_residual = check_residuals(m, sol.assignment, solver.feas_tol).max_any;
    }
    out.witness = std::move(sol);
    return out;
}

namespace {

net::Network slice_periods(const net::Network& net, int first, int count) {
    net::Network out = net;
    out.demand.factors.assign(
        net.demand.factors.begin() + first,
        net.demand.factors.begin() + first + count);
    return out;
}

}  // namespace

VerificationReport audit_map(const region::FlexibilityMap& map, const net::Network& net,
                             const AuditOptions& options) {
    VerificationReport report;
    report.residual_tol = options.residual_tol;
    report.gap_tol = options.gap_tol;

    report.residuals = check_residuals(*map.model, map.assignment, options.residual_tol);
    report.max_gap = relaxation_gap(*map.model, map.assignment);
    report.residual_pass = report.residuals.pass(options.residual_tol);
    report.gap_pass = report.max_gap <= options.gap_tol;
    report.relaxation_inexact = report.max_gap > 1e-4;

    const model::ModelOptions& mopts = map.model->options;
    const int threads = detail::thread_budget(options.threads);

    // Sampled interior deployment paths: rejection sampling inside every
    // period's polygon, then one oracle solve per path.
    if (options.path_trials > 0) {
        struct PeriodGeom {
            geometry::Polygon hull;
            double plo, phi, qlo, qhi;
            geometry::Point centroid;
        };
        std::vector<PeriodGeom> geom(static_cast<std::size_t>(map.T));
        for (int t = 0; t < map.T; ++t) {
            PeriodGeom& g = geom[static_cast<std::size_t>(t)];
            g.hull = geometry::convex_hull(map.polygon(t).vertices);
            g.plo = g.phi = g.hull.vertices[0].p;
            g.qlo = g.qhi = g.hull.vertices[0].q;
            g.centroid = {0.0, 0.0};
            for (const geometry::Point& v : g.hull.vertices) {
                g.plo = std::min(g.plo, v.p);
                g.phi = std::max(g.phi, v.p);
                g.qlo = std::min(g.qlo, v.q);
                g.qhi = std::max(g.qhi, v.q);
                g.centroid.p += v.p / static_cast<double>(g.hull.size());
                g.centroid.q += v.q / static_cast<double>(g.hull.size());
            }
        }

        std::vector<std::vector<geometry::Point>> paths(
            static_cast<std::size_t>(options.path_trials));
        detail::Rng rng(options.seed);
        for (auto& path : paths) {
            path.resize(static_cast<std::size_t>(map.T));
            for (int t = 0; t < map.T; ++t) {
                const PeriodGeom& g = geom[static_cast<std::size_t>(t)];
                geometry::Point pt = g.centroid;
                for (int tries = 0; tries < 1000; ++tries) {
                    const geometry::Point cand{rng.uniform(g.plo, g.phi),
                                               rng.uniform(g.qlo, g.qhi)};
                    if (g.hull.size() >= 3 && geometry::contains(g.hull, cand)) {
                        pt = cand;
                        break;
                    }
                }
                path[static_cast<std::size_t>(t)] = pt;
            }
        }

        std::vector<char> feas(paths.size(), 0);
        std::vector<std::string> diags(paths.size());
        const net::Network horizon_net = slice_periods(net, 0, map.T);
        detail::parallel_for(static_cast<int>(paths.size()), threads, [&](int i) {
            const OracleResult r = feasibility_oracle(
                horizon_net, paths[static_cast<std::size_t>(i)], mopts, map.mode, options.solver);
            feas[static_cast<std::size_t>(i)] =
                r.feasible && r.witness_residual <= options.residual_tol ? 1 : 0;
            if (!feas[static_cast<std::size_t>(i)]) {
                diags[static_cast<std::size_t>(i)] = r.diagnostic;
            }
        });
        report.path_trials_attempted = static_cast<int>(paths.size());
        for (std::size_t i = 0; i < paths.size(); ++i) {
            if (feas[i]) {
                ++report.path_trials_feasible;
            } else if (report.first_path_failure.empty()) {
                std::ostringstream os;
                os << "trial " << i << ": " << diags[i];
                report.first_path_failure = os.str();
            }
        }
        report.paths_pass = report.path_trials_feasible == report.path_trials_attempted;
    } else {
        report.paths_pass = true;
    }

    // Exhaustive vertex-to-vertex transitions between consecutive periods.
    if (options.check_transitions && map.T >= 2) {
        struct Pair {
            int t, h1, h2;
        };
        std::vector<Pair> pairs;
        for (int t = 0; t + 1 < map.T; ++t) {
            for (int h1 = 0; h1 < map.H; ++h1) {
                for (int h2 = 0; h2 < map.H; ++h2) pairs.push_back({t, h1, h2});
            }
        }
        std::vector<char> feas(pairs.size(), 0);
        std::vector<std::string> diags(pairs.size());
        detail::parallel_for(static_cast<int>(pairs.size()), threads, [&](int i) {
            const Pair& pr = pairs[static_cast<std::size_t>(i)];
            const net::Network pair_net = slice_periods(net, pr.t, 2);
            const auto& v1 = map.vertices[static_cast<std::size_t>(pr.t)]
                                         [static_cast<std::size_t>(pr.h1)];
            const auto& v2 = map.vertices[static_cast<std::size_t>(pr.t + 1)]
                                         [static_cast<std::size_t>(pr.h2)];
            const OracleResult r = feasibility_oracle(
                pair_net, {{v1.p, v1.q}, {v2.p, v2.q}}, mopts, map.mode, options.solver);
            feas[static_cast<std::size_t>(i)] = r.feasible ? 1 : 0;
            if (!r.feasible) diags[static_cast<std::size_t>(i)] = r.diagnostic;
        });
        report.transitions_attempted = static_cast<int>(pairs.size());
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            if (feas[i]) {
                ++report.transitions_feasible;
            } else if (report.first_transition_failure.empty()) {
                const Pair& pr = pairs[i];
                std::ostringstream os;
                os << "transition t" << pr.t << ":h" << pr.h1 << " -> t" << pr.t + 1 << ":h"
                   << pr.h2 << ": " << diags[i];
                report.first_transition_failure = os.str();
            }
        }
        report.transitions_pass = report.transitions_feasible == report.transitions_attempted;
    } else {
        report.transitions_pass = true;
    }

    return report;
}

std::string report_text(const VerificationReport& r) {
    std::ostringstream os;
    os.precision(6);
    os << "residuals: max " << r.residuals.max_any << " (tol " << r.residual_tol << ") "
       << (r.residual_pass ? "PASS" : "FAIL") << "\n";
    for (const auto& [family, value] : r.residuals.family_max) {
        os << "  " << family << ": " << value << "\n";
    }
    os << "relaxation gap: max " << r.max_gap << " (tol " << r.gap_tol << ") "
       << (r.gap_pass ? "PASS" : "FAIL");
    if (r.relaxation_inexact) os << " [relaxation-inexact]";
    os << "\n";
    if (r.path_trials_attempted > 0) {
        os << "deployment paths: " << r.path_trials_feasible << "/" << r.path_trials_attempted
           << " feasible " << (r.paths_pass ? "PASS" : "FAIL") << "\n";
        if (!r.first_path_failure.empty()) os << "  first failure: " << r.first_path_failure
                                              << "\n";
    }
    if (r.transitions_attempted > 0) {
        os << "vertex transitions: " << r.transitions_feasible << "/" << r.transitions_attempted
           << " feasible " << (r.transitions_pass ? "PASS" : "FAIL") << "\n";
        if (!r.first_transition_failure.empty()) {
            os << "  first failure: " << r.first_transition_failure << "\n";
        }
    }
    os << "verdict: " << (r.all_pass() ? "PASS" : "FAIL") << "\n";
    return os.str();
}

}  // namespace flex::verify
