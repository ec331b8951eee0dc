#pragma once

#include <memory>
#include <stdexcept>
#include <vector>

#include "flex/geometry.hpp"
#include "flex/model.hpp"
#include "flex/solver.hpp"

namespace flex::region {

/// Exploration angles of the directional objective, strictly increasing
/// in [0, 2*pi).
struct DirectionSet {
    std::vector<double> angles;
    int size() const { return static_cast<int>(angles.size()); }
};

/// Evenly spaced angles offset + 2*pi*(h-1)/H, wrapped and sorted.
/// Throws std::invalid_argument for H < 3.
DirectionSet make_directions(int H, double offset = 0.0);

enum class ObjectiveKind : std::uint8_t { Linear, Surveyor };

const char* objective_name(ObjectiveKind k);

struct Vertex {
    double alpha = 0.0;
    double p = 0.0;
    double q = 0.0;
};

struct MapStats {
    double wall_seconds = 0.0;         // full pipeline
    double linear_wall_seconds = 0.0;  // directional stage only
    int ipm_iterations = 0;
    int enumeration_nodes = 0;
    int surveyor_passes = 0;
};

/// Raised when the nominal scenario fails the feasibility pre-solve; carries
/// the pre-solve diagnostic (most violated row family).
struct InfeasibleModel : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Per-period PQ polygons plus the full dispatch behind every vertex.
/// Vertices are emitted in direction order, which is angular (CCW) order;
/// no hull pass is applied to solver output.
struct FlexibilityMap {
    ObjectiveKind objective = ObjectiveKind::Linear;
    model::CouplingMode mode = model::CouplingMode::AllPairs;
    int H = 0;
    int T = 0;
    double offset = 0.0;
    DirectionSet directions;
    std::vector<std::vector<Vertex>> vertices;  // [t][h]
    std::shared_ptr<const model::OptimizationModel> model;
    std::vector<double> assignment;  // witness dispatch for every (h,t)
    std::vector<solve::BinaryFixing> binary_fixing;
    MapStats stats;

    geometry::Polygon polygon(int t) const;
    double area(int t) const;
    double total_area() const;
};

struct MapConfig {
    int H = 8;
    int T = 1;
    double offset = 0.0;
    model::CouplingMode mode = model::CouplingMode::AllPairs;
    model::ModelOptions model_options;
    solve::SolverOptions solver_options;
};

/// Directional objective: one monolithic solve over all boundary points and
/// periods, followed by a loss-minimizing re-solve at pinned directional
/// values that presses every cone onto the physical surface.
FlexibilityMap solve_linear_map(const net::Network& net, const MapConfig& cfg);

/// Area objective: initialized from the linear map, refined by successive
/// convexification, then tightened at pinned vertex coordinates. Per-period
/// area never falls below the linear map's by more than 1e-9.
FlexibilityMap solve_surveyor_map(const net::Network& net, const MapConfig& cfg);

/// Stored network operating point behind vertex (h,t).
/// Throws std::out_of_range for bad indices.
solve::Dispatch extract_dispatch(const FlexibilityMap& map, int h, int t);

}  // namespace flex::region
