#include "flex/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>

#include "parallel.hpp"
#include "rng.hpp"

namespace flex::baselines {

namespace {

net::Network single_period(const net::Network& net, int t) {
    net::Network out = net;
    out.demand.factors = {net.demand.factors.at(static_cast<std::size_t>(t))};
    return out;
}

struct SetPoints {
    std::vector<double> pg, qg, bat;  // bat: net charge power (>0 charging)
};

double max_cone_gap(const model::OptimizationModel& m, std::span<const double> x) {
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

}  // namespace

MonteCarloResult monte_carlo_region(const net::Network& net, int t, int n, std::uint64_t seed,
                                    const model::ModelOptions& options,
                                    const solve::SolverOptions& solver, int threads) {
    if (n < 1) throw std::invalid_argument("monte_carlo_region: n must be at least 1");
    const net::Network sub = single_period(net, t);
    const model::OptimizationModel m =
        model::assemble_unchecked(sub, 1, 1, model::CouplingMode::SameIndex, options);

    // Draw every setpoint sequentially so the cloud is a pure function of
    // the seed; only the feasibility solves run in parallel.
    std::vector<SetPoints> draws(static_cast<std::size_t>(n));
    {
        detail::Rng rng(seed);
        const double dt = sub.demand.dt;
        for (SetPoints& sp : draws) {
            sp.pg.reserve(net.generators.size());
            sp.qg.reserve(net.generators.size());
            for (const net::Generator& g : net.generators) {
                sp.pg.push_back(rng.uniform(g.pmin, g.pmax));
                sp.qg.push_back(rng.uniform(g.qmin, g.qmax));
            }
            if (options.with_batteries) {
                for (const net::Battery& b : net.batteries) {
                    // Stay SOC-feasible for this period in isolation.
                    const double hi = std::min(b.pc_max, (b.emax - b.e0) / (b.eta_c * dt));
                    const double lo = -std::min(b.pd_max, b.e0 * b.eta_d / dt);
                    sp.bat.push_back(rng.uniform(lo, hi));
                }
            }
        }
    }

    std::vector<char> ok(static_cast<std::size_t>(n), 0);
    std::vector<geometry::Point> pts(static_cast<std::size_t>(n));
    const int budget = detail::thread_budget(threads);
    detail::parallel_for(n, budget, [&](int i) {
        const SetPoints& sp = draws[static_cast<std::size_t>(i)];
        solve::SolveRequest req;
        req.model = &m;
        req.options = solver;
        req.objective = solve::loss_minimization_objective(m);
        for (std::size_t g = 0; g < sp.pg.size(); ++g) {
            req.pins.emplace_back(m.col(model::VarKind::GenP, static_cast<int>(g), 0, 0),
                                  sp.pg[g]);
            req.pins.emplace_back(m.col(model::VarKind::GenQ, static_cast<int>(g), 0, 0),
                                  sp.qg[g]);
        }
        for (std::size_t b = 0; b < sp.bat.size(); ++b) {
            req.pins.emplace_back(m.col(model::VarKind::BatCharge, static_cast<int>(b), 0, 0),
                                  std::max(sp.bat[b], 0.0));
            req.pins.emplace_back(m.col(model::VarKind::BatDischarge, static_cast<int>(b), 0, 0),
                                  std::max(-sp.bat[b], 0.0));
        }
        const solve::Solution sol = solve::solve_conic(req);
        if (sol.feasible() && max_cone_gap(m, sol.assignment) <= 1e-6) {
            ok[static_cast<std::size_t>(i)] = 1;
            pts[static_cast<std::size_t>(i)] = {
                sol.assignment[static_cast<std::size_t>(m.pcc_p(0, 0))],
                sol.assignment[static_cast<std::size_t>(m.pcc_q(0, 0))]};
        }
    });

    MonteCarloResult out;
    out.cloud.seed = seed;
    out.cloud.attempted = n;
    for (int i = 0; i < n; ++i) {
        if (ok[static_cast<std::size_t>(i)]) {
            out.cloud.points.push_back(pts[static_cast<std::size_t>(i)]);
        }
    }
    out.cloud.feasible = static_cast<int>(out.cloud.points.size());
    if (!out.cloud.points.empty()) {
        out.hull = geometry::convex_hull(out.cloud.points);
    }
    return out;
}

geometry::Polygon minkowski_box(const net::Network& net, int t,
                                const model::ModelOptions& options) {
    double gen_p_lo = 0.0, gen_p_hi = 0.0, gen_q_lo = 0.0, gen_q_hi = 0.0;
    for (const net::Generator& g : net.generators) {
        gen_p_lo += g.pmin;
        gen_p_hi += g.pmax;
        gen_q_lo += g.qmin;
        gen_q_hi += g.qmax;
    }
    if (options.with_batteries) {
        for (const net::Battery& b : net.batteries) {
            gen_p_lo -= b.pc_max;  // charging consumes
            gen_p_hi += b.pd_max;  // discharging generates
        }
    }
    double pd = 0.0, qd = 0.0;
    for (const auto& [bus, _] : net.demand.base_p) pd += net.demand.p_at(bus, t);
    for (const auto& [bus, _] : net.demand.base_q) qd += net.demand.q_at(bus, t);

    const double plo = pd - gen_p_hi;
    const double phi = pd - gen_p_lo;
    const double qlo = qd - gen_q_hi;
    const double qhi = qd - gen_q_lo;
    geometry::Polygon box;
    box.vertices = {{plo, qlo}, {phi, qlo}, {phi, qhi}, {plo, qhi}};
    return geometry::normalize(box);
}

region::FlexibilityMap per_period_map(const net::Network& net, const region::MapConfig& cfg) {
    region::MapConfig decoupled = cfg;
    decoupled.model_options.independent_periods = true;
    return region::solve_linear_map(net, decoupled);
}

}  // namespace flex::baselines
