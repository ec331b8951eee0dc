#include <doctest.h>

#include <cmath>

#include "flex/baselines.hpp"
#include "flex/geometry.hpp"
#include "support/oracles.hpp"
#include "support/toys.hpp"

using namespace flex;
using geometry::Point;
using geometry::Polygon;

namespace {

net::Network copper_net() {
    return net::load_network_file(toys::fixture_path("copper_plate.json"));
}

model::ModelOptions copper_opts() {
    model::ModelOptions opt;
    opt.network_limits = false;
    opt.with_ramps = false;
    return opt;
}

}  // namespace

TEST_CASE("minkowski box") {
    const net::Network net = copper_net();

    SUBCASE("paper aggregates give the documented rectangle") {
        const Polygon box = baselines::minkowski_box(net, 0);
        REQUIRE(box.size() == 4);
        CHECK(box.vertices[0].p == doctest::Approx(-0.2));
        CHECK(box.vertices[0].q == doctest::Approx(-0.073));
        CHECK(box.vertices[2].p == doctest::Approx(1.3));
        CHECK(box.vertices[2].q == doctest::Approx(0.927));
    }
    SUBCASE("no DERs degenerate to the demand point") {
        net::Network bare = net;
        bare.generators.clear();
        const Polygon pt = baselines::minkowski_box(bare, 0);
        CHECK(pt.size() == 1);
        CHECK(pt.vertices[0].p == doctest::Approx(1.3));
        CHECK(pt.vertices[0].q == doctest::Approx(0.427));
    }
    SUBCASE("device intervals add") {
        net::Network two = net;
        two.generators.push_back({2, 0.0, 0.5, -0.25, 0.25, 0.5, 0.5});
        const Polygon box = baselines::minkowski_box(two, 0);
        CHECK(box.vertices[0].p == doctest::Approx(-0.7));   // 1.3 - 2.0
        CHECK(box.vertices[2].q == doctest::Approx(1.177));  // 0.427 + 0.75
    }
    SUBCASE("battery power widens only the active interval") {
        net::Network bat = net;
        bat.batteries.push_back({2, 0.4, 0.1, 0.2, 0.9, 0.9, 0.2});
        const Polygon box = baselines::minkowski_box(bat, 0);
        CHECK(box.vertices[0].p == doctest::Approx(-0.4));  // discharge extends export
        CHECK(box.vertices[2].p == doctest::Approx(1.4));   // charge extends import
        CHECK(box.vertices[2].q == doctest::Approx(0.927));
    }
}

TEST_CASE("monte carlo sampling") {
    const net::Network net = copper_net();

    SUBCASE("single sample yields a degenerate hull") {
        const auto mc = baselines::monte_carlo_region(net, 0, 1, 42, copper_opts());
        CHECK(mc.cloud.attempted == 1);
        CHECK(mc.cloud.feasible == 1);
        CHECK(mc.hull.size() == 1);
    }
    SUBCASE("clouds replay bit-identically for a fixed seed") {
        const auto a = baselines::monte_carlo_region(net, 0, 64, 7, copper_opts());
        const auto b = baselines::monte_carlo_region(net, 0, 64, 7, copper_opts());
        REQUIRE(a.cloud.points.size() == b.cloud.points.size());
        for (std::size_t i = 0; i < a.cloud.points.size(); ++i) {
            CHECK(a.cloud.points[i].p == b.cloud.points[i].p);
            CHECK(a.cloud.points[i].q == b.cloud.points[i].q);
        }
    }
    SUBCASE("thread count does not change the cloud") {
        const auto a = baselines::monte_carlo_region(net, 0, 64, 9, copper_opts(), {}, 1);
        const auto b = baselines::monte_carlo_region(net, 0, 64, 9, copper_opts(), {}, 4);
        REQUIRE(a.cloud.points.size() == b.cloud.points.size());
        for (std::size_t i = 0; i < a.cloud.points.size(); ++i) {
            CHECK(a.cloud.points[i].p == b.cloud.points[i].p);
        }
    }
    SUBCASE("hull approaches the exact rectangle on the copper plate") {
        const auto mc = baselines::monte_carlo_region(net, 0, 2000, 11, copper_opts());
        CHECK(mc.cloud.feasible == 2000);  // no limits to violate
        const auto box = oracles::copper_box(net, 0, true);
        const double exact = (box.phi - box.plo) * (box.qhi - box.qlo);
        CHECK(geometry::shoelace(mc.hull) <= exact + 1e-9);
        CHECK(geometry::shoelace(mc.hull) >= 0.95 * exact);
        // Growing prefixes only grow the hull.
        const auto smaller = baselines::monte_carlo_region(net, 0, 500, 11, copper_opts());
        CHECK(geometry::shoelace(smaller.hull) <= geometry::shoelace(mc.hull) + 1e-12);
    }
    SUBCASE("samples respect engineering limits when they are active") {
        // Tight thermal limit: most random setpoints overload the line.
        const net::Network tight = toys::two_bus(0.01, 0.01, 1.0, 0.3, 1.1, true, 1.5, 0.8);
        const auto mc = baselines::monte_carlo_region(tight, 0, 200, 3, {});
        CHECK(mc.cloud.feasible < mc.cloud.attempted);
        for (const Point& pt : mc.cloud.points) {
            CHECK(pt.p * pt.p + pt.q * pt.q <= 1.1 + 1e-6);
        }
    }
}

TEST_CASE("containment chain: monte carlo hull inside region inside minkowski box") {
    const net::Network net = copper_net();
    region::MapConfig cfg;
    cfg.H = 8;
    cfg.T = 1;
    cfg.model_options = copper_opts();
    const region::FlexibilityMap map = region::solve_linear_map(net, cfg);
    const Polygon region_hull = geometry::convex_hull(map.polygon(0).vertices);
    const Polygon box = baselines::minkowski_box(net, 0);
    const Polygon box_hull = geometry::convex_hull(box.vertices);

    const auto mc = baselines::monte_carlo_region(net, 0, 500, 21, copper_opts());
    for (const Point& pt : mc.cloud.points) {
        CHECK(geometry::contains(region_hull, pt, 1e-6));
    }
    for (const auto& v : map.vertices[0]) {
        CHECK(geometry::contains(box_hull, {v.p, v.q}, 1e-6));
    }
}

TEST_CASE("per-period map is the T=1 map by construction") {
    net::Network net = copper_net();
    net.demand.factors = {1.0};
    region::MapConfig cfg;
    cfg.H = 6;
    cfg.T = 1;
    cfg.model_options = copper_opts();
    const region::FlexibilityMap direct = region::solve_linear_map(net, cfg);
    const region::FlexibilityMap per = baselines::per_period_map(net, cfg);
    for (int h = 0; h < 6; ++h) {
        CHECK(direct.vertices[0][h].p == doctest::Approx(per.vertices[0][h].p).epsilon(1e-9));
        CHECK(direct.vertices[0][h].q == doctest::Approx(per.vertices[0][h].q).epsilon(1e-9));
    }
}

TEST_CASE("ramp-restricted multi-period areas stay below the per-period ones") {
    const net::Network net = net::load_network_file(toys::fixture_path("five_bus.json"));
    region::MapConfig cfg;
    cfg.H = 8;
    cfg.T = 2;
    cfg.model_options.ramp_scale_pct = 5.0;
    const region::FlexibilityMap coupled = region::solve_linear_map(net, cfg);
    const region::FlexibilityMap per = baselines::per_period_map(net, cfg);
    for (int t = 0; t < 2; ++t) {
        CHECK(coupled.area(t) < per.area(t));
    }
}
