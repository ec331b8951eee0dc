#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "flex/network.hpp"

namespace flex::model {

enum class VarKind : std::uint8_t {
    VoltageSq,     // v_{i,h,t}
    CurrentSq,     // l_{ij,h,t}
    FlowP,         // p_{ij,h,t}
    FlowQ,         // q_{ij,h,t}
    GenP,          // active generator dispatch
    GenQ,          // reactive generator dispatch
    BatCharge,     // battery charging power
    BatDischarge,  // battery discharging power
    BatEnergy,     // stored energy
    PccP,          // net active import at the interface bus
    PccQ,          // net reactive import at the interface bus
    ChargeFlag,    // binary charge indicator (never a conic column)
    DischargeFlag  // binary discharge indicator (never a conic column)
};

const char* kind_name(VarKind k);

struct VariableRef {
    VarKind kind;
    int element = 0;  // bus / line / generator / battery index (0 for PCC kinds)
    int h = 0;
    int t = 0;
};

enum class RowFamily : std::uint8_t {
    ActiveBalance,   // per line and receiving bus
    ReactiveBalance,
    VoltageDrop,
    PccDefP,  // interface active injection equals flow out of the PCC
    PccDefQ,
    BatterySoc,
    Ramp,
    DirectionFloor,  // keeps a replica's directional value during re-solves
    Pin              // fixes one variable (used by oracles and baselines)
};

const char* family_name(RowFamily f);

/// One sparse constraint row: lo <= coeffs . x <= hi (lo == hi for equalities).
struct LinearRow {
    RowFamily family;
    int element = -1;
    int h = -1;
    int t = -1;
    std::vector<std::pair<int, double>> coeffs;
    double lo = 0.0;
    double hi = 0.0;

    bool is_equality() const { return lo == hi; }
};

/// Rotated-cone relation p^2 + q^2 <= l * v for one line replica, kept both
/// as the convex constraint and as the exactness audit record.
struct ConeRecord {
    int line = 0;
    int h = 0;
    int t = 0;
    int l_col = -1;
    int v_col = -1;
    int p_col = -1;
    int q_col = -1;
};

/// Charge/discharge exclusivity for one battery replica. The binary
/// indicators are never continuous columns; feasible integer assignments
/// are exactly the points with pc * pd = 0.
struct BinaryPair {
    int battery = 0;
    int h = 0;
    int t = 0;
    int pc_col = -1;
    int pd_col = -1;
};

/// Cross-period pairing of extreme points used by the ramp rows.
enum class CouplingMode : std::uint8_t { SameIndex, AllPairs };

const char* coupling_name(CouplingMode m);

struct ModelOptions {
    /// When false, impedances are dropped (lossless balance), voltage bands
    /// are widened and thermal limits lifted: the Case-I configuration.
    bool network_limits = true;
    bool with_batteries = true;
    bool with_ramps = true;
    /// No coupling across periods: ramp rows are dropped and every period's
    /// storage restarts from e0. Used by the per-period baseline.
    bool independent_periods = false;
    /// Ramp override as a percentage of each generator's capacity
    /// (pmax - pmin); unset means the device's own ramp fields.
    std::optional<double> ramp_scale_pct;
};

double effective_ramp_up(const net::Generator& g, const ModelOptions& options);
double effective_ramp_dn(const net::Generator& g, const ModelOptions& options);

/// Model 1 replicated over extreme points h = 0..H-1 and periods t = 0..T-1.
/// Objectives are attached later by the region layer; binary indicators are
/// handled by the solve layer through the BinaryPair records.
struct OptimizationModel {
    net::Network network;
    net::RadialOrder radial;
    ModelOptions options;
    CouplingMode mode = CouplingMode::AllPairs;
    int H = 0;
    int T = 0;

    std::vector<double> lb;
    std::vector<double> ub;
    std::vector<LinearRow> rows;
    std::vector<ConeRecord> cones;
    std::vector<BinaryPair> binaries;

    int num_vars() const { return static_cast<int>(lb.size()); }

    /// Column of a replicated variable; negative element kinds (PccP/PccQ)
    /// ignore `element`. Throws std::out_of_range on bad indices.
    int col(VarKind kind, int element, int h, int t) const;
    int pcc_p(int h, int t) const { return col(VarKind::PccP, 0, h, t); }
    int pcc_q(int h, int t) const { return col(VarKind::PccQ, 0, h, t); }

    VariableRef ref_of(int column) const;

    /// Effective per-line impedances (zeroed when network limits are off).
    double line_r(int line) const;
    double line_x(int line) const;

    int rows_in_family(RowFamily f) const;

    /// Plain-text listing for diffing: one row per constraint plus bounds
    /// and cone records.
    std::string dump() const;

  private:
    friend class ModelBuilder;
    int cols_per_replica_ = 0;
    int bat_count_ = 0;  // 0 when batteries are disabled
};

/// Incremental assembly of the constraint system. The build_* methods mirror
/// the constraint groups of the formulation and may be called separately in
/// tests; assemble() runs all of them in a fixed order.
class ModelBuilder {
  public:
    ModelBuilder(const net::Network& net, int H, int T, CouplingMode mode, ModelOptions options);

    void build_distflow(int h, int t);
    void build_engineering_limits(int h, int t);
    void build_generator_limits(int h, int t);
    void build_ramp();
    void build_battery();

    /// All fragments over (h,t) in deterministic order.
    OptimizationModel build();

    OptimizationModel& model() { return model_; }

  private:
    OptimizationModel model_;
    std::vector<std::pair<int, int>> oriented_;          // line -> (parent bus, child bus)
    std::vector<std::vector<int>> child_lines_;          // bus index -> outgoing line indices
    double effective_ramp(const net::Generator& g, bool up) const;
};

/// Public entry point: requires H >= 3 (a polygon) and 1 <= T <= horizon of
/// the demand profile. Throws std::invalid_argument otherwise.
OptimizationModel assemble(const net::Network& net, int H, int T, CouplingMode mode,
                           const ModelOptions& options = {});

/// Same without the polygon requirement; used by oracles that replicate a
/// single point (H = 1).
OptimizationModel assemble_unchecked(const net::Network& net, int H, int T, CouplingMode mode,
                                     const ModelOptions& options = {});

}  // namespace flex::model
