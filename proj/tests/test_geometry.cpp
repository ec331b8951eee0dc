#include <doctest.h>

#include <cmath>
#include <numbers>

#include "flex/geometry.hpp"
#include "support/oracles.hpp"
#include "support/rng_util.hpp"

using namespace flex::geometry;

TEST_CASE("shoelace on simple shapes") {
    Polygon square{{{0, 0}, {1, 0}, {1, 1}, {0, 1}}};
    CHECK(shoelace(square) == doctest::Approx(1.0));

    Polygon triangle{{{0, 0}, {1, 0}, {0, 1}}};
    CHECK(shoelace(triangle) == doctest::Approx(0.5));

    Polygon collinear{{{0, 0}, {1, 1}, {2, 2}}};
    CHECK(shoelace(collinear) == doctest::Approx(0.0));

    Polygon degenerate{{{0, 0}, {1, 1}}};
    CHECK_THROWS_AS(shoelace(degenerate), std::invalid_argument);
}

TEST_CASE("shoelace is invariant under rotation and reversal") {
    Polygon poly{{{0, 0}, {2, 0}, {3, 1}, {1.5, 2.5}, {-0.5, 1}}};
    const double base = shoelace(poly);
    for (std::size_t shift = 1; shift < poly.size(); ++shift) {
        Polygon rotated;
        for (std::size_t i = 0; i < poly.size(); ++i) {
            rotated.vertices.push_back(poly.vertices[(i + shift) % poly.size()]);
        }
        CHECK(shoelace(rotated) == doctest::Approx(base));
    }
    Polygon reversed{{poly.vertices.rbegin(), poly.vertices.rend()}};
    CHECK(shoelace(reversed) == doctest::Approx(base));
}

TEST_CASE("convex hull basics") {
    std::vector<Point> pts{{0, 0}, {1, 0}, {1, 1}, {0, 1}, {0.5, 0.5}};
    const Polygon hull = convex_hull(pts);
    CHECK(hull.size() == 4);
    CHECK(shoelace(hull) == doctest::Approx(1.0));

    std::vector<Point> same{{0.3, 0.4}, {0.3, 0.4}, {0.3, 0.4}};
    CHECK(convex_hull(same).size() == 1);

    // Random points in a disk: hull area bounded by the disk area.
    testutil::Rng rng(7);
    std::vector<Point> disk;
    while (disk.size() < 1000) {
        const Point pt{rng.uniform(-1, 1), rng.uniform(-1, 1)};
        if (pt.p * pt.p + pt.q * pt.q <= 1.0) disk.push_back(pt);
    }
    const Polygon dh = convex_hull(disk);
    CHECK(shoelace(dh) <= std::numbers::pi);
    for (const Point& pt : disk) CHECK(contains(dh, pt, 1e-9));
}

TEST_CASE("containment") {
    Polygon square{{{0, 0}, {1, 0}, {1, 1}, {0, 1}}};
    CHECK(contains(square, {0.5, 0.5}));
    CHECK_FALSE(contains(square, {2, 2}));
    CHECK(contains(square, {0.5, 0.0}));  // boundary midpoint: closed region

    Polygon bowtie{{{0, 0}, {1, 1}, {1, 0}, {0, 1}}};
    CHECK_THROWS_AS(contains(bowtie, {0.5, 0.5}), std::invalid_argument);
}

TEST_CASE("region gap") {
    Polygon square{{{0, 0}, {1, 0}, {1, 1}, {0, 1}}};
    CHECK(region_gap(square, square) == doctest::Approx(0.0));

    Polygon shifted{{{1, 0}, {2, 0}, {2, 1}, {1, 1}}};
    CHECK(region_gap(square, shifted) == doctest::Approx(1.0));

    Polygon dup{{{0, 0}, {1, 0}, {1, 0}, {1, 1}, {0, 1}, {0, 0}}};
    CHECK(region_gap(square, dup) == doctest::Approx(0.0));
}

TEST_CASE("hull monotone under point removal") {
    testutil::Rng rng(11);
    std::vector<Point> pts;
    for (int i = 0; i < 60; ++i) pts.push_back({rng.uniform(-2, 2), rng.uniform(-2, 2)});
    const double full = shoelace(convex_hull(pts));
    std::vector<Point> subset(pts.begin(), pts.begin() + 30);
    const Polygon sub_hull = convex_hull(subset);
    CHECK(shoelace(sub_hull) <= full + 1e-12);
}

TEST_CASE("randomized differential test against brute-force hull and area") {
    testutil::Rng rng(1234);
    for (int round = 0; round < 300; ++round) {
        const int n = 3 + static_cast<int>(rng.uniform(0, 12));
        std::vector<Point> pts;
        for (int i = 0; i < n; ++i) pts.push_back({rng.uniform(-5, 5), rng.uniform(-5, 5)});

        const Polygon hull = convex_hull(pts);
        const std::vector<Point> brute = oracles::brute_hull(pts);
        REQUIRE(hull.size() == brute.size());
        const double area = hull.size() >= 3 ? shoelace(hull) : 0.0;
        const double brute_area =
            brute.size() >= 3 ? std::abs(oracles::brute_signed_area(brute)) : 0.0;
        CHECK(area == doctest::Approx(brute_area).epsilon(1e-9));
        for (const Point& pt : pts) {
            if (hull.size() >= 3) CHECK(contains(hull, pt, 1e-9));
        }
    }
}
