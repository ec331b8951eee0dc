#pragma once

#include <string>
#include <vector>

#include "flex/baselines.hpp"
#include "flex/region.hpp"
#include "flex/verify.hpp"

namespace flex::io {

/// One row per vertex: t,h,alpha,p_pcc,q_pcc (t and h are 1-based).
std::string map_csv(const region::FlexibilityMap& map);

/// Metadata, vertices, and (optionally) the full witness assignment, which
/// is enough to rebuild the map exactly against the same network file.
std::string map_json(const region::FlexibilityMap& map, bool include_witnesses = true);

/// Rebuild a map from map_json output plus the network it was solved on.
region::FlexibilityMap map_from_json(const std::string& text, const net::Network& net);

/// Vertices parsed from map_csv output, [t][h].
std::vector<std::vector<region::Vertex>> map_vertices_from_csv(const std::string& text);

/// One closed polygon per period with 1 p.u. gridlines.
std::string map_svg(const region::FlexibilityMap& map, int t);

/// All periods overlaid in one drawing.
std::string map_overlay_svg(const region::FlexibilityMap& map);

/// idx,p,q,feasible rows preceded by a '# attempted=.. feasible=.. seed=..'
/// comment.
std::string cloud_csv(const baselines::SampleCloud& cloud);

std::string report_json(const verify::VerificationReport& report);

/// Solver statistics for a finished map (the only artifact with timing).
std::string stats_json(const region::FlexibilityMap& map);

void write_file(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

}  // namespace flex::io
