#include "flex/model.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace flex::model {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kWideV = 16.0;    // relaxed voltage-squared ceiling
constexpr double kWideCur = 400.0; // relaxed thermal limit (20 p.u. of current)
}  // namespace

const char* kind_name(VarKind k) {
    switch (k) {
        case VarKind::VoltageSq: return "v";
        case VarKind::CurrentSq: return "l";
        case VarKind::FlowP: return "p_flow";
        case VarKind::FlowQ: return "q_flow";
        case VarKind::GenP: return "p_gen";
        case VarKind::GenQ: return "q_gen";
        case VarKind::BatCharge: return "p_charge";
        case VarKind::BatDischarge: return "p_discharge";
        case VarKind::BatEnergy: return "energy";
        case VarKind::PccP: return "p_pcc";
        case VarKind::PccQ: return "q_pcc";
        case VarKind::ChargeFlag: return "u_charge";
        case VarKind::DischargeFlag: return "u_discharge";
    }
    return "?";
}

const char* family_name(RowFamily f) {
    switch (f) {
        case RowFamily::ActiveBalance: return "active_balance";
        case RowFamily::ReactiveBalance: return "reactive_balance";
        case RowFamily::VoltageDrop: return "voltage_drop";
        case RowFamily::PccDefP: return "pcc_def_p";
        case RowFamily::PccDefQ: return "pcc_def_q";
        case RowFamily::BatterySoc: return "battery_soc";
        case RowFamily::Ramp: return "ramp";
        case RowFamily::DirectionFloor: return "direction_floor";
        case RowFamily::Pin: return "pin";
    }
    return "?";
}

const char* coupling_name(CouplingMode m) {
    return m == CouplingMode::SameIndex ? "same-index" : "all-pairs";
}

int OptimizationModel::col(VarKind kind, int element, int h, int t) const {
    const int nb = static_cast<int>(network.buses.size());
    const int nl = static_cast<int>(network.lines.size());
    const int ng = static_cast<int>(network.generators.size());
    if (h < 0 || h >= H || t < 0 || t >= T) {
        throw std::out_of_range("model column lookup: (h,t) out of range");
    }
    const int base = (t * H + h) * cols_per_replica_;
    int offset = 0;
    auto check = [&](int count) {
        if (element < 0 || element >= count) {
            throw std::out_of_range("model column lookup: element out of range");
        }
    };
    switch (kind) {
        case VarKind::VoltageSq: check(nb); return base + element;
        case VarKind::CurrentSq: check(nl); return base + nb + element;
        case VarKind::FlowP: check(nl); return base + nb + nl + element;
        case VarKind::FlowQ: check(nl); return base + nb + 2 * nl + element;
        case VarKind::GenP: check(ng); return base + nb + 3 * nl + element;
        case VarKind::GenQ: check(ng); return base + nb + 3 * nl + ng + element;
        default: break;
    }
    offset = nb + 3 * nl + 2 * ng;
    switch (kind) {
        case VarKind::BatCharge:
            check(bat_count_);
            return base + offset + element;
        case VarKind::BatDischarge:
            check(bat_count_);
            return base + offset + bat_count_ + element;
        case VarKind::BatEnergy:
            check(bat_count_);
            return base + offset + 2 * bat_count_ + element;
        case VarKind::PccP: return base + offset + 3 * bat_count_;
        case VarKind::PccQ: return base + offset + 3 * bat_count_ + 1;
        default: throw std::out_of_range("model column lookup: not a continuous kind");
    }
}

VariableRef OptimizationModel::ref_of(int column) const {
    const int nb = static_cast<int>(network.buses.size());
    const int nl = static_cast<int>(network.lines.size());
    const int ng = static_cast<int>(network.generators.size());
    const int rep = column / cols_per_replica_;
    int rem = column % cols_per_replica_;
    VariableRef ref;
    ref.t = rep / H;
    ref.h = rep % H;
    auto take = [&](VarKind k, int count) -> bool {
        if (rem < count) {
            ref.kind = k;
            ref.element = rem;
            return true;
        }
        rem -= count;
        return false;
    };
    if (take(VarKind::VoltageSq, nb)) return ref;
    if (take(VarKind::CurrentSq, nl)) return ref;
    if (take(VarKind::FlowP, nl)) return ref;
    if (take(VarKind::FlowQ, nl)) return ref;
    if (take(VarKind::GenP, ng)) return ref;
    if (take(VarKind::GenQ, ng)) return ref;
    if (take(VarKind::BatCharge, bat_count_)) return ref;
    if (take(VarKind::BatDischarge, bat_count_)) return ref;
    if (take(VarKind::BatEnergy, bat_count_)) return ref;
    if (take(VarKind::PccP, 1)) return ref;
    if (take(VarKind::PccQ, 1)) return ref;
    throw std::out_of_range("ref_of: bad column");
}

double OptimizationModel::line_r(int line) const {
    return options.network_limits ? network.lines[static_cast<std::size_t>(line)].r : 0.0;
}

double OptimizationModel::line_x(int line) const {
    return options.network_limits ? network.lines[static_cast<std::size_t>(line)].x : 0.0;
}

int OptimizationModel::rows_in_family(RowFamily f) const {
    int n = 0;
    for (const LinearRow& row : rows) n += row.family == f ? 1 : 0;
    return n;
}

std::string OptimizationModel::dump() const {
    std::ostringstream os;
    os.precision(12);
    for (const LinearRow& row : rows) {
        os << family_name(row.family) << "." << row.element << "[h" << row.h << ",t" << row.t
           << "]:";
        for (const auto& [col, coef] : row.coeffs) {
            const VariableRef ref = ref_of(col);
            os << " " << (coef >= 0 ? "+" : "") << coef << "*" << kind_name(ref.kind) << "."
               << ref.element << "[h" << ref.h << ",t" << ref.t << "]";
        }
        if (row.is_equality()) {
            os << " = " << row.lo;
        } else {
            os << " in [" << row.lo << ", " << row.hi << "]";
        }
        os << "\n";
    }
    for (int c = 0; c < num_vars(); ++c) {
        const VariableRef ref = ref_of(c);
        os << "bound " << kind_name(ref.kind) << "." << ref.element << "[h" << ref.h << ",t"
           << ref.t << "] in [" << lb[static_cast<std::size_t>(c)] << ", "
           << ub[static_cast<std::size_t>(c)] << "]\n";
    }
    for (const ConeRecord& cr : cones) {
        os << "cone line." << cr.line << "[h" << cr.h << ",t" << cr.t
           << "]: p^2 + q^2 <= l*v\n";
    }
    return os.str();
}

ModelBuilder::ModelBuilder(const net::Network& net, int H, int T, CouplingMode mode,
                           ModelOptions options) {
    if (H < 1) throw std::invalid_argument("assemble: H must be at least 1");
    if (T < 1) throw std::invalid_argument("assemble: T must be at least 1");
    if (T > net.demand.horizon()) {
        throw std::invalid_argument("assemble: T exceeds the demand profile horizon");
    }
    model_.network = net;
    model_.radial = net::validate_radial(net);
    model_.options = options;
    model_.mode = mode;
    model_.H = H;
    model_.T = T;
    model_.bat_count_ = options.with_batteries ? static_cast<int>(net.batteries.size()) : 0;

    const int nb = static_cast<int>(net.buses.size());
    const int nl = static_cast<int>(net.lines.size());
    const int ng = static_cast<int>(net.generators.size());
    model_.cols_per_replica_ = nb + 3 * nl + 2 * ng + 3 * model_.bat_count_ + 2;
    const std::size_t n = static_cast<std::size_t>(model_.cols_per_replica_) *
                          static_cast<std::size_t>(H) * static_cast<std::size_t>(T);
    model_.lb.assign(n, -kInf);
    model_.ub.assign(n, kInf);

    // Canonical line orientation: parent at the PCC side.
    oriented_.resize(static_cast<std::size_t>(nl), {-1, -1});
    child_lines_.resize(static_cast<std::size_t>(nb));
    for (const auto& [child, line] : model_.radial.parent_line) {
        oriented_[static_cast<std::size_t>(line)] = {model_.radial.parent.at(child), child};
        child_lines_[static_cast<std::size_t>(net.bus_index(model_.radial.parent.at(child)))]
            .push_back(line);
    }

    const net::Bus& pcc = net.bus(net.pcc_bus());
    if (pcc.vmin_sq > 1.0 || pcc.vmax_sq < 1.0) {
        throw std::invalid_argument(
            "assemble: PCC voltage is fixed at 1.0 p.u. but the bus bounds exclude it");
    }
}

void ModelBuilder::build_distflow(int h, int t) {
    const net::Network& net = model_.network;
    const int pcc = net.pcc_bus();

    for (std::size_t e = 0; e < net.lines.size(); ++e) {
        const auto [bus_i, bus_j] = oriented_[e];
        const int le = static_cast<int>(e);
        const double r = model_.line_r(le);
        const double x = model_.line_x(le);
        const int j_idx = net.bus_index(bus_j);

        LinearRow pbal{RowFamily::ActiveBalance, le, h, t, {}, 0.0, 0.0};
        pbal.coeffs.emplace_back(model_.col(VarKind::FlowP, le, h, t), 1.0);
        if (r != 0.0) pbal.coeffs.emplace_back(model_.col(VarKind::CurrentSq, le, h, t), -r);

        LinearRow qbal{RowFamily::ReactiveBalance, le, h, t, {}, 0.0, 0.0};
        qbal.coeffs.emplace_back(model_.col(VarKind::FlowQ, le, h, t), 1.0);
        if (x != 0.0) qbal.coeffs.emplace_back(model_.col(VarKind::CurrentSq, le, h, t), -x);

        for (int k : child_lines_[static_cast<std::size_t>(j_idx)]) {
            pbal.coeffs.emplace_back(model_.col(VarKind::FlowP, k, h, t), -1.0);
            qbal.coeffs.emplace_back(model_.col(VarKind::FlowQ, k, h, t), -1.0);
        }
        for (std::size_t g = 0; g < net.generators.size(); ++g) {
            if (net.generators[g].bus != bus_j) continue;
            pbal.coeffs.emplace_back(model_.col(VarKind::GenP, static_cast<int>(g), h, t), 1.0);
            qbal.coeffs.emplace_back(model_.col(VarKind::GenQ, static_cast<int>(g), h, t), 1.0);
        }
        for (int b = 0; b < model_.bat_count_; ++b) {
            if (net.batteries[static_cast<std::size_t>(b)].bus != bus_j) continue;
            pbal.coeffs.emplace_back(model_.col(VarKind::BatCharge, b, h, t), -1.0);
            pbal.coeffs.emplace_back(model_.col(VarKind::BatDischarge, b, h, t), 1.0);
        }
        pbal.lo = pbal.hi = net.demand.p_at(bus_j, t);
        qbal.lo = qbal.hi = net.demand.q_at(bus_j, t);
        model_.rows.push_back(std::move(pbal));
        model_.rows.push_back(std::move(qbal));

        LinearRow drop{RowFamily::VoltageDrop, le, h, t, {}, 0.0, 0.0};
        drop.coeffs.emplace_back(model_.col(VarKind::VoltageSq, j_idx, h, t), 1.0);
        drop.coeffs.emplace_back(model_.col(VarKind::VoltageSq, net.bus_index(bus_i), h, t), -1.0);
        if (r != 0.0) drop.coeffs.emplace_back(model_.col(VarKind::FlowP, le, h, t), 2.0 * r);
        if (x != 0.0) drop.coeffs.emplace_back(model_.col(VarKind::FlowQ, le, h, t), 2.0 * x);
        if (r != 0.0 || x != 0.0) {
            drop.coeffs.emplace_back(model_.col(VarKind::CurrentSq, le, h, t), -(r * r + x * x));
        }
        model_.rows.push_back(std::move(drop));

        model_.cones.push_back(ConeRecord{le, h, t, model_.col(VarKind::CurrentSq, le, h, t),
                                          model_.col(VarKind::VoltageSq, net.bus_index(bus_i), h, t),
                                          model_.col(VarKind::FlowP, le, h, t),
                                          model_.col(VarKind::FlowQ, le, h, t)});
    }

    LinearRow pdef{RowFamily::PccDefP, 0, h, t, {}, 0.0, 0.0};
    pdef.coeffs.emplace_back(model_.pcc_p(h, t), 1.0);
    LinearRow qdef{RowFamily::PccDefQ, 0, h, t, {}, 0.0, 0.0};
    qdef.coeffs.emplace_back(model_.pcc_q(h, t), 1.0);
    for (int k : child_lines_[static_cast<std::size_t>(model_.network.bus_index(pcc))]) {
        pdef.coeffs.emplace_back(model_.col(VarKind::FlowP, k, h, t), -1.0);
        qdef.coeffs.emplace_back(model_.col(VarKind::FlowQ, k, h, t), -1.0);
    }
    model_.rows.push_back(std::move(pdef));
    model_.rows.push_back(std::move(qdef));

    // Slack convention: interface voltage pinned to 1 p.u.
    const int vpcc = model_.col(VarKind::VoltageSq, model_.network.bus_index(pcc), h, t);
    model_.lb[static_cast<std::size_t>(vpcc)] = 1.0;
    model_.ub[static_cast<std::size_t>(vpcc)] = 1.0;
}

void ModelBuilder::build_engineering_limits(int h, int t) {
    const net::Network& net = model_.network;
    const int pcc = net.pcc_bus();
    for (std::size_t i = 0; i < net.buses.size(); ++i) {
        if (net.buses[i].id == pcc) continue;  // pinned by the slack convention
        const int c = model_.col(VarKind::VoltageSq, static_cast<int>(i), h, t);
        if (model_.options.network_limits) {
            model_.lb[static_cast<std::size_t>(c)] = net.buses[i].vmin_sq;
            model_.ub[static_cast<std::size_t>(c)] = net.buses[i].vmax_sq;
        } else {
            model_.lb[static_cast<std::size_t>(c)] = 1.0 / kWideV;
            model_.ub[static_cast<std::size_t>(c)] = kWideV;
        }
    }
    for (std::size_t e = 0; e < net.lines.size(); ++e) {
        const int c = model_.col(VarKind::CurrentSq, static_cast<int>(e), h, t);
        model_.lb[static_cast<std::size_t>(c)] = 0.0;
        model_.ub[static_cast<std::size_t>(c)] =
            model_.options.network_limits ? net.lines[e].imax_sq : kWideCur;
    }
}

void ModelBuilder::build_generator_limits(int h, int t) {
    const net::Network& net = model_.network;
    for (std::size_t g = 0; g < net.generators.size(); ++g) {
        const net::Generator& gen = net.generators[g];
        const int cp = model_.col(VarKind::GenP, static_cast<int>(g), h, t);
        const int cq = model_.col(VarKind::GenQ, static_cast<int>(g), h, t);
        model_.lb[static_cast<std::size_t>(cp)] = gen.pmin;
        model_.ub[static_cast<std::size_t>(cp)] = gen.pmax;
        model_.lb[static_cast<std::size_t>(cq)] = gen.qmin;
        model_.ub[static_cast<std::size_t>(cq)] = gen.qmax;
    }
}

double effective_ramp_up(const net::Generator& g, const ModelOptions& options) {
    if (options.ramp_scale_pct) return (*options.ramp_scale_pct / 100.0) * (g.pmax - g.pmin);
    return g.ramp_up;
}

double effective_ramp_dn(const net::Generator& g, const ModelOptions& options) {
    if (options.ramp_scale_pct) return (*options.ramp_scale_pct / 100.0) * (g.pmax - g.pmin);
    return g.ramp_dn;
}

double ModelBuilder::effective_ramp(const net::Generator& g, bool up) const {
    return up ? effective_ramp_up(g, model_.options) : effective_ramp_dn(g, model_.options);
}

void ModelBuilder::build_ramp() {
    if (!model_.options.with_ramps || model_.options.independent_periods || model_.T < 2) return;
    const net::Network& net = model_.network;
    for (std::size_t g = 0; g < net.generators.size(); ++g) {
        const net::Generator& gen = net.generators[g];
        const double rup = effective_ramp(gen, true);
        const double rdn = effective_ramp(gen, false);
        // A ramp covering the whole dispatch range can never bind.
        if (rup >= gen.pmax - gen.pmin && rdn >= gen.pmax - gen.pmin) continue;
        for (int t = 0; t + 1 < model_.T; ++t) {
            for (int h_next = 0; h_next < model_.H; ++h_next) {
                const int h_lo = model_.mode == CouplingMode::SameIndex ? h_next : 0;
                const int h_hi = model_.mode == CouplingMode::SameIndex ? h_next + 1 : model_.H;
                for (int h_prev = h_lo; h_prev < h_hi; ++h_prev) {
                    LinearRow row{RowFamily::Ramp, static_cast<int>(g), h_next, t + 1, {}, -rdn,
                                  rup};
                    row.coeffs.emplace_back(
                        model_.col(VarKind::GenP, static_cast<int>(g), h_next, t + 1), 1.0);
                    row.coeffs.emplace_back(
                        model_.col(VarKind::GenP, static_cast<int>(g), h_prev, t), -1.0);
                    model_.rows.push_back(std::move(row));
                }
            }
        }
    }
}

void ModelBuilder::build_battery() {
    const net::Network& net = model_.network;
    const double dt = net.demand.dt;
    for (int b = 0; b < model_.bat_count_; ++b) {
        const net::Battery& bat = net.batteries[static_cast<std::size_t>(b)];
        for (int h = 0; h < model_.H; ++h) {
            for (int t = 0; t < model_.T; ++t) {
                const int cc = model_.col(VarKind::BatCharge, b, h, t);
                const int cd = model_.col(VarKind::BatDischarge, b, h, t);
                const int ce = model_.col(VarKind::BatEnergy, b, h, t);
                model_.lb[static_cast<std::size_t>(cc)] = 0.0;
                model_.ub[static_cast<std::size_t>(cc)] = bat.pc_max;
                model_.lb[static_cast<std::size_t>(cd)] = 0.0;
                model_.ub[static_cast<std::size_t>(cd)] = bat.pd_max;
                model_.lb[static_cast<std::size_t>(ce)] = 0.0;
                model_.ub[static_cast<std::size_t>(ce)] = bat.emax;

                // Energy balance; state chains along t for each extreme point
                // (or restarts from e0 when periods are decoupled).
                LinearRow soc{RowFamily::BatterySoc, b, h, t, {}, 0.0, 0.0};
                soc.coeffs.emplace_back(ce, 1.0);
                soc.coeffs.emplace_back(cc, -bat.eta_c * dt);
                soc.coeffs.emplace_back(cd, dt / bat.eta_d);
                if (t == 0 || model_.options.independent_periods) {
                    soc.lo = soc.hi = bat.e0;
                } else {
                    soc.coeffs.emplace_back(model_.col(VarKind::BatEnergy, b, h, t - 1), -1.0);
                }
                model_.rows.push_back(std::move(soc));

                model_.binaries.push_back(BinaryPair{b, h, t, cc, cd});
            }
        }
    }
}

OptimizationModel ModelBuilder::build() {
    for (int t = 0; t < model_.T; ++t) {
        for (int h = 0; h < model_.H; ++h) {
            build_distflow(h, t);
            build_engineering_limits(h, t);
            build_generator_limits(h, t);
        }
    }
    build_ramp();
    build_battery();
    return std::move(model_);
}

OptimizationModel assemble(const net::Network& net, int H, int T, CouplingMode mode,
                           const ModelOptions& options) {
    if (H < 3) throw std::invalid_argument("assemble: H must be at least 3 to span a polygon");
    return assemble_unchecked(net, H, T, mode, options);
}

OptimizationModel assemble_unchecked(const net::Network& net, int H, int T, CouplingMode mode,
                                     const ModelOptions& options) {
    ModelBuilder builder(net, H, T, mode, options);
    return builder.build();
}

}  // namespace flex::model
