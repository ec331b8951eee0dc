#pragma once

// Hand-built cone programs and tiny networks used across test files.

#include <string>

#include "flex/model.hpp"
#include "flex/network.hpp"

namespace toys {

inline std::string fixture_path(const char* name) {
    return std::string(FLEX_FIXTURE_DIR) + "/" + name;
}

// PCC -- load bus with one line; optional generator box at bus 2.
inline flex::net::Network two_bus(double r, double x, double load_p, double load_q,
                                  double imax_sq = 100.0, bool with_gen = false,
                                  double gen_span = 2.0, double q_span = 2.0) {
    flex::net::Network net;
    net.base_mva = 1.0;
    net.buses = {{1, 0.25, 4.0, true}, {2, 0.25, 4.0, false}};
    net.lines = {{1, 2, r, x, imax_sq}};
    if (with_gen) {
        net.generators = {{2, -gen_span, gen_span, -q_span, q_span, 2 * gen_span, 2 * gen_span}};
    }
    net.demand.base_p[2] = load_p;
    net.demand.base_q[2] = load_q;
    net.demand.factors = {1.0};
    net.demand.dt = 1.0;
    return net;
}

// Disk-constrained toy: wide generator behind a current-limited line with
// r = 0 (lossless in p), tiny x. The PQ region is the disk p^2+q^2 <= imax_sq
// truncated by the generator's reactive box, up to O(x) distortion.
inline flex::net::Network truncated_disk(double radius, double q_band, double x_small = 1e-3) {
    flex::net::Network net;
    net.base_mva = 1.0;
    net.buses = {{1, 0.25, 4.0, true}, {2, 0.25, 4.0, false}};
    net.lines = {{1, 2, 0.0, x_small, radius * radius}};
    net.generators = {{2, -3.0, 3.0, -q_band, q_band, 6.0, 6.0}};
    net.demand.base_p[2] = 0.0;
    net.demand.base_q[2] = 0.0;
    net.demand.factors = {1.0, 1.0};
    net.demand.dt = 1.0;
    return net;
}

}  // namespace toys
