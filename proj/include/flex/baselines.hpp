#pragma once

#include <cstdint>
#include <vector>

#include "flex/geometry.hpp"
#include "flex/region.hpp"

namespace flex::baselines {

/// Monte Carlo estimate of one period's region: device setpoints drawn
/// uniformly, infeasible power flows discarded.
struct SampleCloud {
    std::vector<geometry::Point> points;  // feasible samples only
    int attempted = 0;
    int feasible = 0;
    std::uint64_t seed = 0;
};

struct MonteCarloResult {
    SampleCloud cloud;
    geometry::Polygon hull;  // empty hull when no sample was feasible
};

/// Draw n DER setpoints (generators uniform in their boxes; battery power
/// uniform over the single-period SOC-feasible interval), fix them, and keep
/// the samples whose power flow meets every engineering limit. The RNG is
/// mt19937_64 with an explicit 53-bit uniform mapping, so clouds replay
/// bit-identically for a given seed on any platform.
MonteCarloResult monte_carlo_region(const net::Network& net, int t, int n, std::uint64_t seed,
                                    const model::ModelOptions& options = {},
                                    const solve::SolverOptions& solver = {}, int threads = 1);

/// Interval aggregation: summed device P/Q ranges offset by the period's
/// demand. Ignores the network entirely.
geometry::Polygon minkowski_box(const net::Network& net, int t,
                                const model::ModelOptions& options = {});

/// T independent single-period maps; no ramp or storage chaining across
/// periods.
region::FlexibilityMap per_period_map(const net::Network& net, const region::MapConfig& cfg);

}  // namespace flex::baselines
