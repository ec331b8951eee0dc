#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace flex::net {

/// Raised when a network document cannot be parsed at all.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Raised when a parsed document violates a structural invariant
/// (non-radial topology, missing PCC, dangling reference, bad bound).
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Bus {
    int id = 0;
    double vmin_sq = 0.9025;  // 0.95^2
    double vmax_sq = 1.1025;  // 1.05^2
    bool is_pcc = false;
};

struct Line {
    int from = 0;
    int to = 0;
    double r = 0.0;
    double x = 0.0;
    double imax_sq = 0.0;
};

struct Generator {
    int bus = 0;
    double pmin = 0.0;
    double pmax = 0.0;
    double qmin = 0.0;
    double qmax = 0.0;
    double ramp_up = 0.0;
    double ramp_dn = 0.0;
};

struct Battery {
    int bus = 0;
    double emax = 0.0;
    double pc_max = 0.0;
    double pd_max = 0.0;
    double eta_c = 1.0;
    double eta_d = 1.0;
    double e0 = 0.0;  // defaults to emax/2 when absent from the document
};

struct DemandProfile {
    std::map<int, double> base_p;
    std::map<int, double> base_q;
    std::vector<double> factors;  // one multiplier per period
    double dt = 1.0;              // interval length in hours

    int horizon() const { return static_cast<int>(factors.size()); }
    double p_at(int bus, int t) const;
    double q_at(int bus, int t) const;
};

/// Radial distribution network in per-unit on base_mva.
struct Network {
    double base_mva = 1.0;
    std::vector<Bus> buses;
    std::vector<Line> lines;
    std::vector<Generator> generators;
    std::vector<Battery> batteries;
    DemandProfile demand;

    int pcc_bus() const;
    const Bus& bus(int id) const;
    int bus_index(int id) const;
};

/// Tree structure rooted at the PCC: parent line per bus and a
/// root-first ordering (leaves last).
struct RadialOrder {
    std::map<int, int> parent;        // bus id -> parent bus id (PCC absent)
    std::map<int, int> parent_line;   // bus id -> index into Network::lines
    std::vector<int> order;           // bus ids, PCC first, leaves last
};

/// Parse and fully validate a network document (JSON, see docs/formats.md).
/// Throws ParseError on malformed input and ValidationError on structural
/// violations (cycles, zero/multiple PCC buses, dangling references).
Network load_network(std::string_view text);

/// Convenience wrapper reading the document from a file.
Network load_network_file(const std::string& path);

/// Serialize back to the document format; load_network(serialize(n)) == n.
std::string serialize(const Network& net);

/// Convert a network given in physical units (MW, MVAR, MWh, ohms) to
/// per-unit on the given bases. Throws ValidationError on nonpositive base.
Network to_per_unit(const Network& raw, double base_mva, double base_kv);

/// Check radiality: |lines| == |buses|-1 and connected from the PCC.
/// Throws ValidationError on cycles or disconnected components.
RadialOrder validate_radial(const Network& net);

bool operator==(const Bus&, const Bus&);
bool operator==(const Line&, const Line&);
bool operator==(const Generator&, const Generator&);
bool operator==(const Battery&, const Battery&);
bool operator==(const DemandProfile&, const DemandProfile&);
bool operator==(const Network&, const Network&);

}  // namespace flex::net
