#include "flex/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace flex::io {

using nlohmann::json;

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::string fmt4(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

const char* kPalette[] = {"#1f6f8b", "#c0392b", "#27ae60", "#8e44ad",
                          "#d35400", "#2c3e50", "#16a085", "#7f8c8d"};

struct Extent {
    double plo = 0.0, phi = 1.0, qlo = 0.0, qhi = 1.0;
};

Extent map_extent(const region::FlexibilityMap& map) {
    Extent e;
    bool first = true;
    for (int t = 0; t < map.T; ++t) {
        for (const region::Vertex& v : map.vertices[static_cast<std::size_t>(t)]) {
            if (first) {
                e = {v.p, v.p, v.q, v.q};
                first = false;
            }
            e.plo = std::min(e.plo, v.p);
            e.phi = std::max(e.phi, v.p);
            e.qlo = std::min(e.qlo, v.q);
            e.qhi = std::max(e.qhi, v.q);
        }
    }
    // Snap to the 1 p.u. grid with half a unit of margin.
    e.plo = std::floor(e.plo - 0.5);
    e.phi = std::ceil(e.phi + 0.5);
    e.qlo = std::floor(e.qlo - 0.5);
    e.qhi = std::ceil(e.qhi + 0.5);
    return e;
}

void svg_header(std::ostringstream& os, const Extent& e, int& width, int& height,
                double& sx, double& sy) {
    const double margin = 56.0;
    const double plot = 420.0;
    sx = plot / (e.phi - e.plo);
    sy = plot / (e.qhi - e.qlo);
    width = static_cast<int>(plot + 2 * margin);
    height = static_cast<int>(plot + 2 * margin);
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
       << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    os << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
}

double to_px_x(double p, const Extent& e, double sx) { return 56.0 + (p - e.plo) * sx; }
double to_px_y(double q, const Extent& e, double sy) { return 56.0 + (e.qhi - q) * sy; }

void svg_grid(std::ostringstream& os, const Extent& e, double sx, double sy) {
    for (double gp = e.plo; gp <= e.phi + 1e-9; gp += 1.0) {
        const double x = to_px_x(gp, e, sx);
        os << "<line x1=\"" << fmt4(x) << "\" y1=\"" << fmt4(to_px_y(e.qlo, e, sy))
           << "\" x2=\"" << fmt4(x) << "\" y2=\"" << fmt4(to_px_y(e.qhi, e, sy))
           << "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
        os << "<text x=\"" << fmt4(x) << "\" y=\"" << fmt4(to_px_y(e.qlo, e, sy) + 18.0)
           << "\" font-size=\"11\" text-anchor=\"middle\" font-family=\"sans-serif\">" << fmt(gp)
           << "</text>\n";
    }
    for (double gq = e.qlo; gq <= e.qhi + 1e-9; gq += 1.0) {
        const double y = to_px_y(gq, e, sy);
        os << "<line x1=\"" << fmt4(to_px_x(e.plo, e, sx)) << "\" y1=\"" << fmt4(y)
           << "\" x2=\"" << fmt4(to_px_x(e.phi, e, sx)) << "\" y2=\"" << fmt4(y)
           << "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
        os << "<text x=\"" << fmt4(to_px_x(e.plo, e, sx) - 8.0) << "\" y=\"" << fmt4(y + 4.0)
           << "\" font-size=\"11\" text-anchor=\"end\" font-family=\"sans-serif\">" << fmt(gq)
           << "</text>\n";
    }
    // Zero axes, when visible.
    if (e.plo < 0.0 && e.phi > 0.0) {
        const double x = to_px_x(0.0, e, sx);
        os << "<line x1=\"" << fmt4(x) << "\" y1=\"" << fmt4(to_px_y(e.qlo, e, sy))
           << "\" x2=\"" << fmt4(x) << "\" y2=\"" << fmt4(to_px_y(e.qhi, e, sy))
           << "\" stroke=\"#888888\" stroke-width=\"1\"/>\n";
    }
    if (e.qlo < 0.0 && e.qhi > 0.0) {
        const double y = to_px_y(0.0, e, sy);
        os << "<line x1=\"" << fmt4(to_px_x(e.plo, e, sx)) << "\" y1=\"" << fmt4(y)
           << "\" x2=\"" << fmt4(to_px_x(e.phi, e, sx)) << "\" y2=\"" << fmt4(y)
           << "\" stroke=\"#888888\" stroke-width=\"1\"/>\n";
    }
}

void svg_axis_labels(std::ostringstream& os, int width, int height) {
    os << "<text x=\"" << width / 2 << "\" y=\"" << height - 12
       << "\" font-size=\"13\" text-anchor=\"middle\" font-family=\"sans-serif\">p (p.u.)"
       << "</text>\n";
    os << "<text x=\"14\" y=\"" << height / 2
       << "\" font-size=\"13\" text-anchor=\"middle\" font-family=\"sans-serif\" "
          "transform=\"rotate(-90 14 "
       << height / 2 << ")\">q (p.u.)</text>\n";
}

void svg_polygon(std::ostringstream& os, const region::FlexibilityMap& map, int t,
                 const Extent& e, double sx, double sy, const char* color) {
    std::ostringstream path;
    const auto& verts = map.vertices[static_cast<std::size_t>(t)];
    for (std::size_t i = 0; i < verts.size(); ++i) {
        path << (i == 0 ? "M" : "L") << fmt4(to_px_x(verts[i].p, e, sx)) << " "
             << fmt4(to_px_y(verts[i].q, e, sy));
    }
    path << "Z";
    os << "<path d=\"" << path.str() << "\" fill=\"" << color
       << "\" fill-opacity=\"0.15\" stroke=\"" << color << "\" stroke-width=\"1.5\"/>\n";
    for (const region::Vertex& v : verts) {
        os << "<circle cx=\"" << fmt4(to_px_x(v.p, e, sx)) << "\" cy=\""
           << fmt4(to_px_y(v.q, e, sy)) << "\" r=\"2.5\" fill=\"" << color << "\"/>\n";
    }
}

json options_json(const model::ModelOptions& o) {
    json j;
    j["network_limits"] = o.network_limits;
    j["with_batteries"] = o.with_batteries;
    j["with_ramps"] = o.with_ramps;
    j["independent_periods"] = o.independent_periods;
    if (o.ramp_scale_pct) j["ramp_scale_pct"] = *o.ramp_scale_pct;
    return j;
}

model::ModelOptions options_from_json(const json& j) {
    model::ModelOptions o;
    o.network_limits = j.value("network_limits", true);
    o.with_batteries = j.value("with_batteries", true);
    o.with_ramps = j.value("with_ramps", true);
    o.independent_periods = j.value("independent_periods", false);
    if (j.contains("ramp_scale_pct")) o.ramp_scale_pct = j["ramp_scale_pct"].get<double>();
    return o;
}

}  // namespace

std::string map_csv(const region::FlexibilityMap& map) {
    std::ostringstream os;
    os << "t,h,alpha,p_pcc,q_pcc\n";
    for (int t = 0; t < map.T; ++t) {
        for (int h = 0; h < map.H; ++h) {
            const region::Vertex& v =
                map.vertices[static_cast<std::size_t>(t)][static_cast<std::size_t>(h)];
            os << (t + 1) << "," << (h + 1) << "," << fmt(v.alpha) << "," << fmt(v.p) << ","
               << fmt(v.q) << "\n";
        }
    }
    return os.str();
}

std::string map_json(const region::FlexibilityMap& map, bool include_witnesses) {
    json j;
    j["objective"] = region::objective_name(map.objective);
    j["coupling"] = model::coupling_name(map.mode);
    j["H"] = map.H;
    j["T"] = map.T;
    j["offset"] = map.offset;
    j["directions"] = map.directions.angles;
    j["model_options"] = options_json(map.model->options);
    json verts = json::array();
    for (int t = 0; t < map.T; ++t) {
        json period = json::array();
        for (const region::Vertex& v : map.vertices[static_cast<std::size_t>(t)]) {
            period.push_back({{"alpha", v.alpha}, {"p", v.p}, {"q", v.q}});
        }
        verts.push_back(period);
    }
    j["vertices"] = verts;
    json fixing = json::array();
    for (const solve::BinaryFixing& f : map.binary_fixing) {
        fixing.push_back(
            {{"battery", f.battery}, {"h", f.h}, {"t", f.t}, {"uc", f.uc}, {"ud", f.ud}});
    }
    j["binary_fixing"] = fixing;
    if (include_witnesses) j["assignment"] = map.assignment;
    return j.dump(2) + "\n";
}

region::FlexibilityMap map_from_json(const std::string& text, const net::Network& net) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::runtime_error(std::string("map document: ") + e.what());
    }
    region::FlexibilityMap map;
    map.objective = j.value("objective", "linear") == std::string("surveyor")
                        ? region::ObjectiveKind::Surveyor
                        : region::ObjectiveKind::Linear;
    map.mode = j.value("coupling", "all-pairs") == std::string("same-index")
                   ? model::CouplingMode::SameIndex
                   : model::CouplingMode::AllPairs;
    map.H = j.at("H").get<int>();
    map.T = j.at("T").get<int>();
    map.offset = j.value("offset", 0.0);
    map.directions.angles = j.at("directions").get<std::vector<double>>();
    const model::ModelOptions options = options_from_json(j.value("model_options", json::object()));
    map.model = std::make_shared<model::OptimizationModel>(
        model::assemble(net, map.H, map.T, map.mode, options));
    map.vertices.resize(static_cast<std::size_t>(map.T));
    int t = 0;
    for (const json& period : j.at("vertices")) {
        for (const json& v : period) {
            map.vertices[static_cast<std::size_t>(t)].push_back(
                {v.at("alpha").get<double>(), v.at("p").get<double>(), v.at("q").get<double>()});
        }
        ++t;
    }
    for (const json& f : j.value("binary_fixing", json::array())) {
        map.binary_fixing.push_back({f.at("battery").get<int>(), f.at("h").get<int>(),
                                     f.at("t").get<int>(), f.at("uc").get<int>(),
                                     f.at("ud").get<int>()});
    }
    if (j.contains("assignment")) {
        map.assignment = j["assignment"].get<std::vector<double>>();
        if (map.assignment.size() != static_cast<std::size_t>(map.model->num_vars())) {
            throw std::runtime_error("map document: witness assignment size mismatch");
        }
    }
    return map;
}

std::vector<std::vector<region::Vertex>> map_vertices_from_csv(const std::string& text) {
    std::vector<std::vector<region::Vertex>> out;
    std::istringstream in(text);
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (first) {  // header
            first = false;
            continue;
        }
        std::istringstream row(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(row, field, ',')) fields.push_back(field);
        if (fields.size() != 5) throw std::runtime_error("map csv: expected 5 columns");
        const std::size_t t = std::stoul(fields[0]);
        if (t == 0) throw std::runtime_error("map csv: periods are 1-based");
        if (out.size() < t) out.resize(t);
        out[t - 1].push_back(
            {std::stod(fields[2]), std::stod(fields[3]), std::stod(fields[4])});
    }
    if (out.empty()) throw std::runtime_error("map csv: no vertex rows");
    return out;
}

std::string map_svg(const region::FlexibilityMap& map, int t) {
    const Extent e = map_extent(map);
    std::ostringstream os;
    int width = 0, height = 0;
    double sx = 0.0, sy = 0.0;
    svg_header(os, e, width, height, sx, sy);
    svg_grid(os, e, sx, sy);
    svg_polygon(os, map, t, e, sx, sy, kPalette[static_cast<std::size_t>(t) % 8]);
    svg_axis_labels(os, width, height);
    os << "<text x=\"" << width / 2 << "\" y=\"24\" font-size=\"14\" text-anchor=\"middle\" "
       << "font-family=\"sans-serif\">period " << (t + 1) << " (" << model::coupling_name(map.mode)
       << ", " << region::objective_name(map.objective) << ")</text>\n";
    os << "</svg>\n";
    return os.str();
}

std::string map_overlay_svg(const region::FlexibilityMap& map) {
    const Extent e = map_extent(map);
    std::ostringstream os;
    int width = 0, height = 0;
    double sx = 0.0, sy = 0.0;
    svg_header(os, e, width, height, sx, sy);
    svg_grid(os, e, sx, sy);
    for (int t = 0; t < map.T; ++t) {
        svg_polygon(os, map, t, e, sx, sy, kPalette[static_cast<std::size_t>(t) % 8]);
    }
    svg_axis_labels(os, width, height);
    os << "<text x=\"" << width / 2 << "\" y=\"24\" font-size=\"14\" text-anchor=\"middle\" "
       << "font-family=\"sans-serif\">periods 1-" << map.T << " ("
       << model::coupling_name(map.mode) << ", " << region::objective_name(map.objective)
       << ")</text>\n";
    os << "</svg>\n";
    return os.str();
}

std::string cloud_csv(const baselines::SampleCloud& cloud) {
    std::ostringstream os;
    os << "# attempted=" << cloud.attempted << " feasible=" << cloud.feasible
       << " seed=" << cloud.seed << "\n";
    os << "idx,p,q,feasible\n";
    for (std::size_t i = 0; i < cloud.points.size(); ++i) {
        os << i << "," << fmt(cloud.points[i].p) << "," << fmt(cloud.points[i].q) << ",1\n";
    }
    return os.str();
}

std::string report_json(const verify::VerificationReport& r) {
    json j;
    j["tolerances"] = {{"residual", r.residual_tol}, {"gap", r.gap_tol}};
    json fam = json::object();
    for (const auto& [family, value] : r.residuals.family_max) fam[family] = value;
    j["residuals"] = {{"families", fam}, {"max", r.residuals.max_any}};
    j["relaxation_gap"] = r.max_gap;
    j["paths"] = {{"attempted", r.path_trials_attempted},
                  {"feasible", r.path_trials_feasible},
                  {"first_failure", r.first_path_failure}};
    j["transitions"] = {{"attempted", r.transitions_attempted},
                        {"feasible", r.transitions_feasible},
                        {"first_failure", r.first_transition_failure}};
    j["verdicts"] = {{"residuals", r.residual_pass},
                     {"relaxation_gap", r.gap_pass},
                     {"relaxation_inexact", r.relaxation_inexact},
                     {"paths", r.paths_pass},
                     {"transitions", r.transitions_pass},
                     {"all", r.all_pass()}};
    return j.dump(2) + "\n";
}

std::string stats_json(const region::FlexibilityMap& map) {
    json j;
    j["objective"] = region::objective_name(map.objective);
    j["coupling"] = model::coupling_name(map.mode);
    j["H"] = map.H;
    j["T"] = map.T;
    j["wall_seconds"] = map.stats.wall_seconds;
    j["linear_wall_seconds"] = map.stats.linear_wall_seconds;
    j["ipm_iterations"] = map.stats.ipm_iterations;
    j["enumeration_nodes"] = map.stats.enumeration_nodes;
    j["surveyor_passes"] = map.stats.surveyor_passes;
    json areas = json::array();
    for (int t = 0; t < map.T; ++t) areas.push_back(map.area(t));
    j["areas"] = areas;
    return j.dump(2) + "\n";
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << content;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace flex::io
