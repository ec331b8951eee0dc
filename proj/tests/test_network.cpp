#include <doctest.h>

#include <functional>
#include <map>
#include <numeric>

#include "flex/network.hpp"
#include "support/toys.hpp"

using namespace flex::net;

namespace {

// Union-find connectivity, used to cross-check validate_radial.
bool connected_by_union_find(const Network& net) {
    std::map<int, int> parent;
    for (const Bus& b : net.buses) parent[b.id] = b.id;
    std::function<int(int)> find = [&](int v) {
        while (parent[v] != v) v = parent[v] = parent[parent[v]];
        return v;
    };
    int components = static_cast<int>(net.buses.size());
    for (const Line& l : net.lines) {
        const int a = find(l.from), b = find(l.to);
        if (a != b) {
            parent[a] = b;
            --components;
        }
    }
    return components == 1;
}

}  // namespace

TEST_CASE("five-bus fixture parses with the documented aggregates") {
    const Network net = load_network_file(toys::fixture_path("five_bus.json"));
    CHECK(net.buses.size() == 5);
    CHECK(net.lines.size() == 4);
    CHECK(net.generators.size() == 3);
    CHECK(net.batteries.size() == 2);

    double installed = 0.0;
    for (const Generator& g : net.generators) installed += g.pmax;
    CHECK(installed == doctest::Approx(1.5));  // 1.5 MW of distributed generation

    double storage = 0.0;
    for (const Battery& b : net.batteries) storage += b.emax;
    CHECK(storage == doctest::Approx(0.2));  // 200 kWh at 1 MVA base

    double pd = 0.0, qd = 0.0;
    for (const auto& [bus, v] : net.demand.base_p) pd += v;
    for (const auto& [bus, v] : net.demand.base_q) qd += v;
    CHECK(pd == doctest::Approx(1.3));
    CHECK(qd == doctest::Approx(0.427));
}

TEST_CASE("minimal two-bus document") {
    const char* doc = R"({
      "buses": [{"id": 0, "pcc": true}, {"id": 1}],
      "lines": [{"from": 0, "to": 1, "r": 0.01, "x": 0.01, "imax_sq": 4.0}],
      "demand": {"base_p": {"1": 0.5}, "base_q": {"1": 0.1}, "factors": [1.0], "dt": 1.0}
    })";
    const Network net = load_network(doc);
    CHECK(net.lines.size() == 1);
    CHECK(net.buses[0].vmin_sq == doctest::Approx(0.9025));  // defaults: [0.95^2, 1.05^2]
    CHECK(net.buses[0].vmax_sq == doctest::Approx(1.1025));
}

TEST_CASE("cycle and disconnection are rejected") {
    const char* cycle = R"({
      "buses": [{"id": 1, "pcc": true}, {"id": 2}, {"id": 3}],
      "lines": [
        {"from": 1, "to": 2, "r": 0.01, "x": 0.01, "imax_sq": 1.0},
        {"from": 2, "to": 3, "r": 0.01, "x": 0.01, "imax_sq": 1.0},
        {"from": 3, "to": 1, "r": 0.01, "x": 0.01, "imax_sq": 1.0}
      ],
      "demand": {"base_p": {}, "base_q": {}, "factors": [1.0], "dt": 1.0}
    })";
    CHECK_THROWS_WITH_AS(load_network(cycle), doctest::Contains("cycle"), ValidationError);

    const char* disconnected = R"({
      "buses": [{"id": 1, "pcc": true}, {"id": 2}, {"id": 3}, {"id": 4}],
      "lines": [
        {"from": 1, "to": 2, "r": 0.01, "x": 0.01, "imax_sq": 1.0},
        {"from": 3, "to": 4, "r": 0.01, "x": 0.01, "imax_sq": 1.0}
      ],
      "demand": {"base_p": {}, "base_q": {}, "factors": [1.0], "dt": 1.0}
    })";
    CHECK_THROWS_WITH_AS(load_network(disconnected), doctest::Contains("disconnected"),
                         ValidationError);
}

TEST_CASE("PCC multiplicity is rejected") {
    const char* none = R"({
      "buses": [{"id": 1}, {"id": 2}],
      "lines": [{"from": 1, "to": 2, "r": 0.01, "x": 0.0, "imax_sq": 1.0}],
      "demand": {"base_p": {}, "base_q": {}, "factors": [1.0], "dt": 1.0}
    })";
    CHECK_THROWS_AS(load_network(none), ValidationError);
}

TEST_CASE("malformed document raises a parse error") {
    CHECK_THROWS_AS(load_network("{not json"), ParseError);
    CHECK_THROWS_AS(load_network(R"({"buses": 7, "demand": {}})"), ParseError);
}

TEST_CASE("serialize round-trips the fixtures field-for-field") {
    for (const char* name : {"five_bus.json", "copper_plate.json"}) {
        const Network net = load_network_file(toys::fixture_path(name));
        const Network again = load_network(serialize(net));
        CHECK(net == again);
    }
}

TEST_CASE("per-unit conversion") {
    Network raw = toys::two_bus(0.1, 0.1, 1.3, 0.427);  // impedances in ohms here
    raw.generators = {{2, 0.0, 1.5, -0.5, 0.5, 1.5, 1.5}};

    SUBCASE("demand scaling at 1 MVA is the identity") {
        const Network pu = to_per_unit(raw, 1.0, 1.0);
        CHECK(pu.demand.base_p.at(2) == doctest::Approx(1.3));
    }
    SUBCASE("0.427 MVAR at 10 MVA base") {
        const Network pu = to_per_unit(raw, 10.0, 1.0);
        CHECK(pu.demand.base_q.at(2) == doctest::Approx(0.0427));
    }
    SUBCASE("inverse scaling recovers the input") {
        const double base_mva = 12.5, base_kv = 6.6;
        const Network pu = to_per_unit(raw, base_mva, base_kv);
        // Undo by converting with the reciprocal bases.
        const double z_base = base_kv * base_kv / base_mva;
        CHECK(pu.lines[0].r * z_base ==
              doctest::Approx(raw.lines[0].r).epsilon(1e-12));
        CHECK(pu.generators[0].pmax * base_mva ==
              doctest::Approx(raw.generators[0].pmax).epsilon(1e-12));
        CHECK(pu.demand.base_p.at(2) * base_mva ==
              doctest::Approx(raw.demand.base_p.at(2)).epsilon(1e-12));
    }
    SUBCASE("nonpositive base is rejected") {
        CHECK_THROWS_AS(to_per_unit(raw, 0.0, 1.0), ValidationError);
        CHECK_THROWS_AS(to_per_unit(raw, 1.0, -2.0), ValidationError);
    }
}

TEST_CASE("radial validation returns parents in root-first order") {
    const char* path = R"({
      "buses": [{"id": 1, "pcc": true}, {"id": 2}, {"id": 3}],
      "lines": [
        {"from": 1, "to": 2, "r": 0.01, "x": 0.01, "imax_sq": 1.0},
        {"from": 2, "to": 3, "r": 0.01, "x": 0.01, "imax_sq": 1.0}
      ],
      "demand": {"base_p": {}, "base_q": {}, "factors": [1.0], "dt": 1.0}
    })";
    const Network net = load_network(path);
    const RadialOrder order = validate_radial(net);
    CHECK(order.parent.at(2) == 1);
    CHECK(order.parent.at(3) == 2);
    CHECK(order.order.front() == 1);

    // Star from the PCC: all parents are the PCC.
    const char* star = R"({
      "buses": [{"id": 9, "pcc": true}, {"id": 1}, {"id": 2}, {"id": 3}],
      "lines": [
        {"from": 9, "to": 1, "r": 0.01, "x": 0.01, "imax_sq": 1.0},
        {"from": 9, "to": 2, "r": 0.01, "x": 0.01, "imax_sq": 1.0},
        {"from": 3, "to": 9, "r": 0.01, "x": 0.01, "imax_sq": 1.0}
      ],
      "demand": {"base_p": {}, "base_q": {}, "factors": [1.0], "dt": 1.0}
    })";
    const RadialOrder star_order = validate_radial(load_network(star));
    CHECK(star_order.parent.at(1) == 9);
    CHECK(star_order.parent.at(2) == 9);
    CHECK(star_order.parent.at(3) == 9);
}

TEST_CASE("radiality agrees with union-find on the fixtures") {
    for (const char* name : {"five_bus.json", "copper_plate.json"}) {
        const Network net = load_network_file(toys::fixture_path(name));
        CHECK(connected_by_union_find(net));
        CHECK(net.lines.size() + 1 == net.buses.size());
        CHECK_NOTHROW(validate_radial(net));
    }
}

TEST_CASE("battery defaults") {
    const char* doc = R"({
      "buses": [{"id": 1, "pcc": true}, {"id": 2}],
      "lines": [{"from": 1, "to": 2, "r": 0.01, "x": 0.01, "imax_sq": 4.0}],
      "batteries": [{"bus": 2, "emax": 0.4, "pc_max": 0.1, "pd_max": 0.1}],
      "demand": {"base_p": {}, "base_q": {}, "factors": [1.0], "dt": 1.0}
    })";
    const Network net = load_network(doc);
    CHECK(net.batteries[0].e0 == doctest::Approx(0.2));  // emax / 2 when unspecified
    CHECK(net.batteries[0].eta_c == doctest::Approx(1.0));
}
