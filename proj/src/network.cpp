#include "flex/network.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace flex::net {

using nlohmann::json;

double DemandProfile::p_at(int bus, int t) const {
    auto it = base_p.find(bus);
    const double base = it == base_p.end() ? 0.0 : it->second;
    return base * factors.at(static_cast<std::size_t>(t));
}

double DemandProfile::q_at(int bus, int t) const {
    auto it = base_q.find(bus);
    const double base = it == base_q.end() ? 0.0 : it->second;
    return base * factors.at(static_cast<std::size_t>(t));
}

int Network::pcc_bus() const {
    for (const Bus& b : buses) {
        if (b.is_pcc) return b.id;
    }
    throw ValidationError("network has no PCC bus");
}

int Network::bus_index(int id) const {
    for (std::size_t i = 0; i < buses.size(); ++i) {
        if (buses[i].id == id) return static_cast<int>(i);
    }
    throw ValidationError("unknown bus id " + std::to_string(id));
}

const Bus& Network::bus(int id) const {
    return buses[static_cast<std::size_t>(bus_index(id))];
}

namespace {

double require_number(const json& j, const char* key, const char* ctx) {
    if (!j.contains(key) || !j[key].is_number()) {
        throw ParseError(std::string(ctx) + ": missing or non-numeric field '" + key + "'");
    }
    return j[key].get<double>();
}

int require_int(const json& j, const char* key, const char* ctx) {
    if (!j.contains(key) || !j[key].is_number_integer()) {
        throw ParseError(std::string(ctx) + ": missing or non-integer field '" + key + "'");
    }
    return j[key].get<int>();
}

void validate(const Network& net) {
    if (net.buses.empty()) throw ValidationError("network has no buses");

    std::set<int> ids;
    int pcc_count = 0;
    for (const Bus& b : net.buses) {
        if (!ids.insert(b.id).second) {
            throw ValidationError("duplicate bus id " + std::to_string(b.id));
        }
        if (b.id < 0) throw ValidationError("bus ids must be nonnegative");
        if (!(b.vmin_sq > 0.0) || !(b.vmin_sq < b.vmax_sq)) {
            throw ValidationError("bus " + std::to_string(b.id) +
                                  ": voltage bounds must satisfy 0 < vmin_sq < vmax_sq");
        }
        if (b.is_pcc) ++pcc_count;
    }
    if (pcc_count != 1) {
        throw ValidationError("network must have exactly one PCC bus, found " +
                              std::to_string(pcc_count));
    }

    std::set<std::pair<int, int>> seen;
    for (const Line& l : net.lines) {
        if (!ids.count(l.from) || !ids.count(l.to)) {
            throw ValidationError("line references unknown bus (" + std::to_string(l.from) + "," +
                                  std::to_string(l.to) + ")");
        }
        if (l.from == l.to) throw ValidationError("line endpoints must differ");
        if (l.r < 0.0 || l.x < 0.0 || l.r + l.x <= 0.0) {
            throw ValidationError("line (" + std::to_string(l.from) + "," + std::to_string(l.to) +
                                  "): need r >= 0, x >= 0, r + x > 0");
        }
        if (!(l.imax_sq > 0.0)) {
            throw ValidationError("line (" + std::to_string(l.from) + "," + std::to_string(l.to) +
                                  "): imax_sq must be positive");
        }
        auto key = std::minmax(l.from, l.to);
        if (!seen.insert(key).second) {
            throw ValidationError("duplicate line between " + std::to_string(l.from) + " and " +
                                  std::to_string(l.to));
        }
    }

    for (const Generator& g : net.generators) {
        if (!ids.count(g.bus)) throw ValidationError("generator references unknown bus");
        if (g.pmin > g.pmax || g.qmin > g.qmax) {
            throw ValidationError("generator at bus " + std::to_string(g.bus) +
                                  ": limits must satisfy pmin <= pmax, qmin <= qmax");
        }
        if (g.ramp_up < 0.0 || g.ramp_dn < 0.0) {
            throw ValidationError("generator ramps must be nonnegative");
        }
    }

    for (const Battery& b : net.batteries) {
        if (!ids.count(b.bus)) throw ValidationError("battery references unknown bus");
        if (!(b.eta_c > 0.0 && b.eta_c <= 1.0 && b.eta_d > 0.0 && b.eta_d <= 1.0)) {
            throw ValidationError("battery efficiencies must lie in (0,1]");
        }
        if (b.pc_max < 0.0 || b.pd_max < 0.0 || b.emax < 0.0) {
            throw ValidationError("battery power/energy limits must be nonnegative");
        }
        if (b.e0 < 0.0 || b.e0 > b.emax) {
            throw ValidationError("battery initial energy out of [0, emax]");
        }
    }

    for (const auto& [bus, _] : net.demand.base_p) {
        if (!ids.count(bus)) throw ValidationError("demand references unknown bus");
    }
    for (const auto& [bus, _] : net.demand.base_q) {
        if (!ids.count(bus)) throw ValidationError("demand references unknown bus");
    }
    if (net.demand.factors.empty()) {
        throw ValidationError("demand profile needs at least one period factor");
    }
    if (!(net.demand.dt > 0.0)) throw ValidationError("demand dt must be positive");

    validate_radial(net);
}

}  // namespace

Network load_network(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("network document: ") + e.what());
    }
    if (!doc.is_object()) throw ParseError("network document: top level must be an object");

    Network net;
    net.base_mva = doc.value("base_mva", 1.0);
    if (!(net.base_mva > 0.0)) throw ValidationError("base_mva must be positive");

    if (!doc.contains("buses") || !doc["buses"].is_array()) {
        throw ParseError("network document: missing 'buses' array");
    }
    for (const json& jb : doc["buses"]) {
        Bus b;
        b.id = require_int(jb, "id", "bus");
        if (jb.contains("vmin_sq")) b.vmin_sq = jb["vmin_sq"].get<double>();
        if (jb.contains("vmax_sq")) b.vmax_sq = jb["vmax_sq"].get<double>();
        b.is_pcc = jb.value("pcc", false);
        net.buses.push_back(b);
    }

    for (const json& jl : doc.value("lines", json::array())) {
        Line l;
        l.from = require_int(jl, "from", "line");
        l.to = require_int(jl, "to", "line");
        l.r = require_number(jl, "r", "line");
        l.x = require_number(jl, "x", "line");
        l.imax_sq = require_number(jl, "imax_sq", "line");
        net.lines.push_back(l);
    }

    for (const json& jg : doc.value("generators", json::array())) {
        Generator g;
        g.bus = require_int(jg, "bus", "generator");
        g.pmin = jg.value("pmin", 0.0);
        g.pmax = require_number(jg, "pmax", "generator");
        g.qmin = require_number(jg, "qmin", "generator");
        g.qmax = require_number(jg, "qmax", "generator");
        g.ramp_up = jg.value("ramp_up", g.pmax - g.pmin);
        g.ramp_dn = jg.value("ramp_dn", g.pmax - g.pmin);
        net.generators.push_back(g);
    }

    for (const json& jb : doc.value("batteries", json::array())) {
        Battery b;
        b.bus = require_int(jb, "bus", "battery");
        b.emax = require_number(jb, "emax", "battery");
        b.pc_max = require_number(jb, "pc_max", "battery");
        b.pd_max = require_number(jb, "pd_max", "battery");
        b.eta_c = jb.value("eta_c", 1.0);
        b.eta_d = jb.value("eta_d", 1.0);
        b.e0 = jb.value("e0", 0.5 * b.emax);
        net.batteries.push_back(b);
    }

    if (!doc.contains("demand") || !doc["demand"].is_object()) {
        throw ParseError("network document: missing 'demand' object");
    }
    const json& jd = doc["demand"];
    const json jp = jd.value("base_p", json::object());
    const json jq = jd.value("base_q", json::object());
    for (const auto& [key, val] : jp.items()) {
        net.demand.base_p[std::stoi(key)] = val.get<double>();
    }
    for (const auto& [key, val] : jq.items()) {
        net.demand.base_q[std::stoi(key)] = val.get<double>();
    }
    if (!jd.contains("factors") || !jd["factors"].is_array()) {
        throw ParseError("demand: missing 'factors' array");
    }
    for (const json& f : jd["factors"]) net.demand.factors.push_back(f.get<double>());
    net.demand.dt = jd.value("dt", 1.0);

    validate(net);
    return net;
}

Network load_network_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open network file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return load_network(ss.str());
}

std::string serialize(const Network& net) {
    json doc;
    doc["base_mva"] = net.base_mva;
    doc["buses"] = json::array();
    for (const Bus& b : net.buses) {
        json jb{{"id", b.id}, {"vmin_sq", b.vmin_sq}, {"vmax_sq", b.vmax_sq}};
        if (b.is_pcc) jb["pcc"] = true;
        doc["buses"].push_back(jb);
    }
    doc["lines"] = json::array();
    for (const Line& l : net.lines) {
        doc["lines"].push_back(
            {{"from", l.from}, {"to", l.to}, {"r", l.r}, {"x", l.x}, {"imax_sq", l.imax_sq}});
    }
    doc["generators"] = json::array();
    for (const Generator& g : net.generators) {
        doc["generators"].push_back({{"bus", g.bus},
                                     {"pmin", g.pmin},
                                     {"pmax", g.pmax},
                                     {"qmin", g.qmin},
                                     {"qmax", g.qmax},
                                     {"ramp_up", g.ramp_up},
                                     {"ramp_dn", g.ramp_dn}});
    }
    doc["batteries"] = json::array();
    for (const Battery& b : net.batteries) {
        doc["batteries"].push_back({{"bus", b.bus},
                                    {"emax", b.emax},
                                    {"pc_max", b.pc_max},
                                    {"pd_max", b.pd_max},
                                    {"eta_c", b.eta_c},
                                    {"eta_d", b.eta_d},
                                    {"e0", b.e0}});
    }
    json jp = json::object();
    json jq = json::object();
    for (const auto& [bus, val] : net.demand.base_p) jp[std::to_string(bus)] = val;
    for (const auto& [bus, val] : net.demand.base_q) jq[std::to_string(bus)] = val;
    doc["demand"] = {{"base_p", jp},
                     {"base_q", jq},
                     {"factors", net.demand.factors},
                     {"dt", net.demand.dt}};
    return doc.dump(2) + "\n";
}

Network to_per_unit(const Network& raw, double base_mva, double base_kv) {
    if (!(base_mva > 0.0) || !(base_kv > 0.0)) {
        throw ValidationError("per-unit bases must be positive");
    }
    const double z_base = base_kv * base_kv / base_mva;  // ohms
    const double i_base_sq = (base_mva / base_kv) * (base_mva / base_kv);

    Network net = raw;
    net.base_mva = base_mva;
    for (Line& l : net.lines) {
        l.r /= z_base;
        l.x /= z_base;
        l.imax_sq /= i_base_sq;
    }
    for (Generator& g : net.generators) {
        g.pmin /= base_mva;
        g.pmax /= base_mva;
        g.qmin /= base_mva;
        g.qmax /= base_mva;
        g.ramp_up /= base_mva;
        g.ramp_dn /= base_mva;
    }
    for (Battery& b : net.batteries) {
        b.emax /= base_mva;  // MWh on base_mva * 1h
        b.pc_max /= base_mva;
        b.pd_max /= base_mva;
        b.e0 /= base_mva;
    }
    for (auto& [_, val] : net.demand.base_p) val /= base_mva;
    for (auto& [_, val] : net.demand.base_q) val /= base_mva;
    return net;
}

RadialOrder validate_radial(const Network& net) {
    if (net.lines.size() + 1 > net.buses.size()) {
        throw ValidationError("cycle detected: |lines| = " + std::to_string(net.lines.size()) +
                              " exceeds |buses| - 1 = " + std::to_string(net.buses.size() - 1));
    }
    if (net.lines.size() + 1 < net.buses.size()) {
        throw ValidationError("disconnected network: |lines| = " +
                              std::to_string(net.lines.size()) + " is below |buses| - 1 = " +
                              std::to_string(net.buses.size() - 1));
    }

    std::map<int, std::vector<std::pair<int, int>>> adj;  // bus -> (neighbor, line index)
    for (std::size_t i = 0; i < net.lines.size(); ++i) {
        const Line& l = net.lines[i];
        adj[l.from].emplace_back(l.to, static_cast<int>(i));
        adj[l.to].emplace_back(l.from, static_cast<int>(i));
    }

    RadialOrder out;
    const int root = net.pcc_bus();
    std::set<int> visited{root};
    std::vector<int> stack{root};
    out.order.push_back(root);
    while (!stack.empty()) {
        const int u = stack.back();
        stack.pop_back();
        for (const auto& [v, line] : adj[u]) {
            if (visited.count(v)) continue;
            visited.insert(v);
            out.parent[v] = u;
            out.parent_line[v] = line;
            out.order.push_back(v);
            stack.push_back(v);
        }
    }

    if (visited.size() != net.buses.size()) {
        throw ValidationError("disconnected network: reached " + std::to_string(visited.size()) +
                              " of " + std::to_string(net.buses.size()) + " buses from the PCC");
    }
    // |lines| = |buses|-1 and connected implies acyclic, but a line closing
    // a cycle between visited buses would have left some bus unreached.
    return out;
}

bool operator==(const Bus& a, const Bus& b) {
    return a.id == b.id && a.vmin_sq == b.vmin_sq && a.vmax_sq == b.vmax_sq && a.is_pcc == b.is_pcc;
}
bool operator==(const Line& a, const Line& b) {
    return a.from == b.from && a.to == b.to && a.r == b.r && a.x == b.x && a.imax_sq == b.imax_sq;
}
bool operator==(const Generator& a, const Generator& b) {
    return a.bus == b.bus && a.pmin == b.pmin && a.pmax == b.pmax && a.qmin == b.qmin &&
           a.qmax == b.qmax && a.ramp_up == b.ramp_up && a.ramp_dn == b.ramp_dn;
}
bool operator==(const Battery& a, const Battery& b) {
    return a.bus == b.bus && a.emax == b.emax && a.pc_max == b.pc_max && a.pd_max == b.pd_max &&
           a.eta_c == b.eta_c && a.eta_d == b.eta_d && a.e0 == b.e0;
}
bool operator==(const DemandProfile& a, const DemandProfile& b) {
    return a.base_p == b.base_p && a.base_q == b.base_q && a.factors == b.factors && a.dt == b.dt;
}
bool operator==(const Network& a, const Network& b) {
    return a.base_mva == b.base_mva && a.buses == b.buses && a.lines == b.lines &&
           a.generators == b.generators && a.batteries == b.batteries && a.demand == b.demand;
}

}  // namespace flex::net
