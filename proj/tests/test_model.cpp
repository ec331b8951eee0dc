#include <doctest.h>

#include <cmath>

#include "flex/model.hpp"
#include "flex/solver.hpp"
#include "support/toys.hpp"

using namespace flex;
using model::CouplingMode;
using model::ModelOptions;
using model::OptimizationModel;
using model::RowFamily;
using model::VarKind;

TEST_CASE("two-bus replica emits three rows, one cone and the interface definition") {
    const net::Network net = toys::two_bus(0.01, 0.01, 1.0, 0.5);
    const OptimizationModel m = model::assemble_unchecked(net, 1, 1, CouplingMode::AllPairs);
    CHECK(m.rows_in_family(RowFamily::ActiveBalance) == 1);
    CHECK(m.rows_in_family(RowFamily::ReactiveBalance) == 1);
    CHECK(m.rows_in_family(RowFamily::VoltageDrop) == 1);
    CHECK(m.rows_in_family(RowFamily::PccDefP) == 1);
    CHECK(m.rows_in_family(RowFamily::PccDefQ) == 1);
    CHECK(m.cones.size() == 1);
    // Audit record and cone are one and the same tuple.
    CHECK(m.cones[0].l_col == m.col(VarKind::CurrentSq, 0, 0, 0));
    CHECK(m.cones[0].v_col == m.col(VarKind::VoltageSq, 0, 0, 0));
}

TEST_CASE("five-bus assembly counts replicate over (h,t)") {
    const net::Network net = net::load_network_file(toys::fixture_path("five_bus.json"));
    const OptimizationModel m = model::assemble(net, 8, 2, CouplingMode::AllPairs);
    CHECK(m.cones.size() == 4u * 16u);  // |lines| cones per (h,t) fragment
    CHECK(m.rows_in_family(RowFamily::ActiveBalance) == 4 * 16);
    CHECK(m.rows_in_family(RowFamily::VoltageDrop) == 4 * 16);
    CHECK(m.rows_in_family(RowFamily::PccDefP) == 16);
    CHECK(m.binaries.size() == 2u * 16u);
}

TEST_CASE("assembly preconditions") {
    const net::Network net = toys::two_bus(0.01, 0.01, 1.0, 0.5);
    CHECK_THROWS_AS(model::assemble(net, 2, 1, CouplingMode::AllPairs), std::invalid_argument);
    CHECK_THROWS_AS(model::assemble(net, 4, 2, CouplingMode::AllPairs),
                    std::invalid_argument);  // horizon of the toy profile is 1

    net::Network bad = net;
    bad.buses[0].vmin_sq = 1.1;  // PCC bounds must contain 1.0
    bad.buses[0].vmax_sq = 1.3;
    CHECK_THROWS_AS(model::assemble_unchecked(bad, 1, 1, CouplingMode::AllPairs),
                    std::invalid_argument);
}

TEST_CASE("engineering limits land in the variable bounds") {
    net::Network net = toys::two_bus(0.01, 0.01, 1.0, 0.5, /*imax_sq=*/4.0);
    const OptimizationModel m = model::assemble_unchecked(net, 1, 1, CouplingMode::AllPairs);
    const int l = m.col(VarKind::CurrentSq, 0, 0, 0);
    CHECK(m.lb[l] == 0.0);
    CHECK(m.ub[l] == 4.0);

    const int v_load = m.col(VarKind::VoltageSq, 1, 0, 0);
    CHECK(m.lb[v_load] == doctest::Approx(0.25));
    CHECK(m.ub[v_load] == doctest::Approx(4.0));

    const int v_pcc = m.col(VarKind::VoltageSq, 0, 0, 0);
    CHECK(m.lb[v_pcc] == 1.0);  // slack convention
    CHECK(m.ub[v_pcc] == 1.0);
}

TEST_CASE("generator limits become box bounds, degenerate boxes allowed") {
    net::Network net = toys::two_bus(0.01, 0.01, 0.0, 0.0, 4.0, /*with_gen=*/true);
    net.generators[0] = {2, 0.2, 0.2, -0.3, 0.3, 0.1, 0.1};  // fixed active dispatch
    const OptimizationModel m = model::assemble_unchecked(net, 1, 1, CouplingMode::AllPairs);
    const int p = m.col(VarKind::GenP, 0, 0, 0);
    CHECK(m.lb[p] == doctest::Approx(0.2));
    CHECK(m.ub[p] == doctest::Approx(0.2));
    const int q = m.col(VarKind::GenQ, 0, 0, 0);
    CHECK(m.lb[q] == doctest::Approx(-0.3));
    CHECK(m.ub[q] == doctest::Approx(0.3));
}

TEST_CASE("ramp row counts for both coupling modes") {
    net::Network net = toys::two_bus(0.01, 0.01, 1.0, 0.5, 4.0, /*with_gen=*/true);
    net.demand.factors = {1.0, 1.1};
    ModelOptions opt;
    opt.ramp_scale_pct = 10.0;  // binding, so rows are emitted

    const OptimizationModel all =
        model::assemble(net, 8, 2, CouplingMode::AllPairs, opt);
    CHECK(all.rows_in_family(RowFamily::Ramp) == 64);  // H^2 per generator per transition

    const OptimizationModel same =
        model::assemble(net, 8, 2, CouplingMode::SameIndex, opt);
    CHECK(same.rows_in_family(RowFamily::Ramp) == 8);

    SUBCASE("single period emits no ramp rows") {
        net::Network one = net;
        one.demand.factors = {1.0};
        const OptimizationModel m = model::assemble(one, 8, 1, CouplingMode::AllPairs, opt);
        CHECK(m.rows_in_family(RowFamily::Ramp) == 0);
    }
    SUBCASE("two-sided row carries the scaled limits") {
        // 45% of a 4.0-wide box: 1.8 either way.
        ModelOptions o2;
        o2.ramp_scale_pct = 45.0;
        const OptimizationModel m = model::assemble(net, 4, 2, CouplingMode::SameIndex, o2);
        bool found = false;
        for (const auto& row : m.rows) {
            if (row.family != RowFamily::Ramp) continue;
            CHECK(row.lo == doctest::Approx(-1.8));
            CHECK(row.hi == doctest::Approx(1.8));
            found = true;
        }
        CHECK(found);
    }
    SUBCASE("vacuous ramps are skipped") {
        ModelOptions o3;  // device ramps equal the full range in the toy
        const OptimizationModel m = model::assemble(net, 4, 2, CouplingMode::AllPairs, o3);
        CHECK(m.rows_in_family(RowFamily::Ramp) == 0);
    }
}

TEST_CASE("battery rows encode the energy balance") {
    net::Network net = toys::two_bus(0.01, 0.01, 0.3, 0.1);
    net.batteries = {{2, 1.0, 1.0, 1.0, 0.9, 0.9, 0.0}};
    net.demand.factors = {1.0, 1.0};
    const OptimizationModel m = model::assemble_unchecked(net, 1, 2, CouplingMode::AllPairs);

    // Charging at 1.0 p.u. for dt = 1 h with eta_c = 0.9 stores 0.9.
    const auto* first = &m.rows[0];
    bool checked_first = false, checked_chain = false;
    for (const auto& row : m.rows) {
        if (row.family != RowFamily::BatterySoc) continue;
        double e_coef = 0, c_coef = 0, d_coef = 0, prev_coef = 0;
        for (const auto& [col, coef] : row.coeffs) {
            if (col == m.col(VarKind::BatEnergy, 0, 0, row.t)) e_coef = coef;
            if (col == m.col(VarKind::BatCharge, 0, 0, row.t)) c_coef = coef;
            if (col == m.col(VarKind::BatDischarge, 0, 0, row.t)) d_coef = coef;
            if (row.t > 0 && col == m.col(VarKind::BatEnergy, 0, 0, row.t - 1)) prev_coef = coef;
        }
        CHECK(e_coef == doctest::Approx(1.0));
        CHECK(c_coef == doctest::Approx(-0.9));           // -eta_c * dt
        CHECK(d_coef == doctest::Approx(1.0 / 0.9));      // dt / eta_d
        if (row.t == 0) {
            CHECK(row.lo == doctest::Approx(0.0));  // e0
            // Substitution: e = 0.9 when pc = 1, pd = 0 satisfies the row.
            CHECK(1.0 * 0.9 + c_coef * 1.0 + d_coef * 0.0 == doctest::Approx(row.lo));
            checked_first = true;
        } else {
            CHECK(prev_coef == doctest::Approx(-1.0));
            // Discharging 0.9 p.u. for 1 h at eta_d = 0.9 from e = 1.0 empties it.
            CHECK(1.0 * 0.0 - 1.0 * 1.0 + d_coef * 0.9 == doctest::Approx(0.0));
            checked_chain = true;
        }
    }
    CHECK(checked_first);
    CHECK(checked_chain);
    CHECK(m.binaries.size() == 2);  // one exclusivity pair per (h,t)
    (void)first;
}

TEST_CASE("disabling constraint groups") {
    const net::Network net = net::load_network_file(toys::fixture_path("five_bus.json"));
    ModelOptions no_bat;
    no_bat.with_batteries = false;
    const OptimizationModel m = model::assemble(net, 4, 2, CouplingMode::AllPairs, no_bat);
    CHECK(m.binaries.empty());
    CHECK(m.rows_in_family(RowFamily::BatterySoc) == 0);

    ModelOptions copper;
    copper.network_limits = false;
    const OptimizationModel c = model::assemble(net, 4, 1, CouplingMode::AllPairs, copper);
    CHECK(c.line_r(0) == 0.0);  // lossless rows
    CHECK(c.line_x(0) == 0.0);
}

TEST_CASE("flat solution satisfies an unloaded network") {
    net::Network net = toys::two_bus(0.02, 0.01, 0.0, 0.0);
    const OptimizationModel m = model::assemble_unchecked(net, 1, 1, CouplingMode::AllPairs);
    std::vector<double> x(static_cast<std::size_t>(m.num_vars()), 0.0);
    x[static_cast<std::size_t>(m.col(VarKind::VoltageSq, 0, 0, 0))] = 1.0;
    x[static_cast<std::size_t>(m.col(VarKind::VoltageSq, 1, 0, 0))] = 1.0;
    CHECK(solve::residual_sweep(m, {}, x) == doctest::Approx(0.0));
}

TEST_CASE("debug dump lists every row with its indices") {
    const net::Network net = toys::two_bus(0.01, 0.01, 1.0, 0.5);
    const OptimizationModel m = model::assemble_unchecked(net, 1, 1, CouplingMode::AllPairs);
    const std::string text = m.dump();
    CHECK(text.find("active_balance.0[h0,t0]:") != std::string::npos);
    CHECK(text.find("cone line.0[h0,t0]") != std::string::npos);
    CHECK(text.find("bound v.0[h0,t0] in [1, 1]") != std::string::npos);
}
