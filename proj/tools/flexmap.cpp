// Command-line front end: scenario solves, Table-style comparisons,
// independent verification, and Monte Carlo sampling.

#include <CLI11.hpp>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "flex/baselines.hpp"
#include "flex/io.hpp"
#include "flex/region.hpp"
#include "flex/verify.hpp"

#include "../src/parallel.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitInfeasible = 2;
constexpr int kExitVerification = 3;

struct CommonConfig {
    std::string net_path;
    int H = 8;
    int T = 0;  // 0: full demand horizon
    double offset = 0.0;
    std::string objective = "linear";
    std::string coupling = "all-pairs";
    double ramp_pct = -1.0;  // <0: device ramps as given
    bool no_batteries = false;
    bool no_network = false;
    std::string out_dir = ".";
};

void add_common(CLI::App* cmd, CommonConfig& cfg, bool with_objective = true) {
    cmd->add_option("--net", cfg.net_path, "network file (JSON)")->required();
    cmd->add_option("--H", cfg.H, "number of boundary points per period");
    cmd->add_option("--T", cfg.T, "periods to solve (default: demand horizon)");
    cmd->add_option("--offset", cfg.offset, "angle offset of the direction set (radians)");
    if (with_objective) {
        cmd->add_option("--objective", cfg.objective, "linear | surveyor")
            ->check(CLI::IsMember({"linear", "surveyor"}));
    }
    cmd->add_option("--coupling", cfg.coupling, "all-pairs | same-index")
        ->check(CLI::IsMember({"all-pairs", "same-index"}));
    cmd->add_option("--ramp", cfg.ramp_pct,
                    "ramp override in percent of each generator's capacity");
    cmd->add_flag("--no-batteries", cfg.no_batteries, "drop storage devices");
    cmd->add_flag("--no-network", cfg.no_network,
                  "disable network limits and losses (copper-plate mode)");
    cmd->add_option("--out", cfg.out_dir, "output directory");
}

flex::region::MapConfig to_map_config(const CommonConfig& cfg, int horizon) {
    flex::region::MapConfig map_cfg;
    map_cfg.H = cfg.H;
    map_cfg.T = cfg.T > 0 ? cfg.T : horizon;
    map_cfg.offset = cfg.offset;
    map_cfg.mode = cfg.coupling == "same-index" ? flex::model::CouplingMode::SameIndex
                                                : flex::model::CouplingMode::AllPairs;
    map_cfg.model_options.network_limits = !cfg.no_network;
    map_cfg.model_options.with_batteries = !cfg.no_batteries;
    if (cfg.ramp_pct >= 0.0) map_cfg.model_options.ramp_scale_pct = cfg.ramp_pct;
    return map_cfg;
}

std::filesystem::path ensure_out_dir(const std::string& dir) {
    std::filesystem::path path(dir);
    std::filesystem::create_directories(path);
    return path;
}

flex::region::FlexibilityMap run_map(const flex::net::Network& net,
                                     const flex::region::MapConfig& cfg,
                                     const std::string& objective) {
    return objective == "surveyor" ? flex::region::solve_surveyor_map(net, cfg)
                                   : flex::region::solve_linear_map(net, cfg);
}

int cmd_solve(const CommonConfig& cfg, bool overlay, bool no_witnesses) {
    const flex::net::Network net = flex::net::load_network_file(cfg.net_path);
    const flex::region::MapConfig map_cfg = to_map_config(cfg, net.demand.horizon());
    if (map_cfg.T < 2) {
        std::fprintf(stderr, "note: T = %d, no inter-temporal rows are generated\n", map_cfg.T);
    }
    const flex::region::FlexibilityMap map = run_map(net, map_cfg, cfg.objective);

    const auto out = ensure_out_dir(cfg.out_dir);
    flex::io::write_file((out / "map.csv").string(), flex::io::map_csv(map));
    flex::io::write_file((out / "map.json").string(),
                         flex::io::map_json(map, !no_witnesses));
    flex::io::write_file((out / "stats.json").string(), flex::io::stats_json(map));
    for (int t = 0; t < map.T; ++t) {
        std::ostringstream name;
        name << "map_t" << (t + 1) << ".svg";
        flex::io::write_file((out / name.str()).string(), flex::io::map_svg(map, t));
    }
    if (overlay) {
        flex::io::write_file((out / "map_overlay.svg").string(),
                             flex::io::map_overlay_svg(map));
    }
    for (int t = 0; t < map.T; ++t) {
        std::printf("period %d: area %.6f p.u.^2 (%d vertices)\n", t + 1, map.area(t), map.H);
    }
    std::printf("artifacts written to %s\n", out.string().c_str());
    return kExitOk;
}

int cmd_compare(const CommonConfig& cfg, const std::vector<std::string>& objectives,
                const std::vector<double>& ramps) {
    struct Variant {
        std::string name;
        std::string objective;
        double ramp_pct;  // <0: unconstrained
    };
    std::vector<Variant> variants;
    for (const std::string& obj : objectives) {
        if (ramps.empty()) {
            variants.push_back({"base", obj, cfg.ramp_pct});
        }
        for (double r : ramps) {
            std::ostringstream name;
            if (r < 0) {
                name << "unconstrained";
            } else {
                name << "ramp-" << r;
            }
            variants.push_back({name.str(), obj, r});
        }
    }
    if (variants.size() < 2) {
        std::fprintf(stderr,
                     "compare needs at least two variants (objectives x ramp levels)\n");
        return kExitUsage;
    }

    const flex::net::Network net = flex::net::load_network_file(cfg.net_path);
    const int T = cfg.T > 0 ? cfg.T : net.demand.horizon();

    struct Row {
        std::string name, objective;
        std::vector<double> areas;
        double seconds = 0.0;
        bool infeasible = false;
    };
    std::vector<Row> rows(variants.size());
    flex::detail::parallel_for(
        static_cast<int>(variants.size()), flex::detail::thread_budget(0), [&](int i) {
            const Variant& var = variants[static_cast<std::size_t>(i)];
            CommonConfig vcfg = cfg;
            vcfg.objective = var.objective;
            vcfg.ramp_pct = var.ramp_pct;
            Row& row = rows[static_cast<std::size_t>(i)];
            row.name = var.name;
            row.objective = var.objective;
            try {
                const flex::region::FlexibilityMap map =
                    run_map(net, to_map_config(vcfg, T), var.objective);
                for (int t = 0; t < map.T; ++t) row.areas.push_back(map.area(t));
                row.seconds = map.stats.wall_seconds;
            } catch (const flex::region::InfeasibleModel&) {
                row.infeasible = true;
            }
        });

    // Reference for the relative column: largest area seen per period.
    std::vector<double> reference(static_cast<std::size_t>(T), 0.0);
    for (const Row& row : rows) {
        for (std::size_t t = 0; t < row.areas.size(); ++t) {
            reference[t] = std::max(reference[t], row.areas[t]);
        }
    }

    std::ostringstream csv;
    csv << "case,period,objective,area,relative_area_pct,wall_time_s\n";
    char buf[160];
    for (const Row& row : rows) {
        for (std::size_t t = 0; t < row.areas.size(); ++t) {
            const double rel = reference[t] > 0 ? 100.0 * row.areas[t] / reference[t] : 0.0;
            std::snprintf(buf, sizeof buf, "%s,%zu,%s,%.12g,%.1f,%.3f\n", row.name.c_str(),
                          t + 1, row.objective.c_str(), row.areas[t], rel, row.seconds);
            csv << buf;
        }
        if (row.infeasible) {
            csv << row.name << ",-," << row.objective << ",infeasible,-,-\n";
        }
    }
    const auto out = ensure_out_dir(cfg.out_dir);
    flex::io::write_file((out / "compare.csv").string(), csv.str());
    std::cout << csv.str();
    return kExitOk;
}

int cmd_verify(const CommonConfig& cfg, const std::string& map_path, int trials,
               std::uint64_t seed, bool no_transitions) {
    const flex::net::Network net = flex::net::load_network_file(cfg.net_path);
    const auto out = ensure_out_dir(cfg.out_dir);

    if (map_path.size() > 4 && map_path.substr(map_path.size() - 4) == ".csv") {
        // Vertex-only route: every vertex, held for one period, must admit a
        // feasible dispatch.
        const auto vertices = flex::io::map_vertices_from_csv(flex::io::read_file(map_path));
        flex::model::ModelOptions opts;
        opts.network_limits = !cfg.no_network;
        opts.with_batteries = !cfg.no_batteries;
        int failures = 0;
        for (std::size_t t = 0; t < vertices.size(); ++t) {
            flex::net::Network slice = net;
            slice.demand.factors = {
                net.demand.factors.at(t < net.demand.factors.size() ? t : 0)};
            for (std::size_t h = 0; h < vertices[t].size(); ++h) {
                const auto& v = vertices[t][h];
                const auto res = flex::verify::feasibility_oracle(slice, {{v.p, v.q}}, opts);
                if (!res.feasible) {
                    ++failures;
                    std::printf("vertex t=%zu h=%zu (%.6f, %.6f): infeasible (%s)\n", t + 1,
                                h + 1, v.p, v.q, res.diagnostic.c_str());
                }
            }
        }
        std::printf("csv verification: %d infeasible vertices\n", failures);
        return failures == 0 ? kExitOk : kExitVerification;
    }

    const flex::region::FlexibilityMap map =
        flex::io::map_from_json(flex::io::read_file(map_path), net);
    if (map.assignment.empty()) {
        std::fprintf(stderr, "map file carries no witness assignment; "
                             "re-export with witnesses enabled\n");
        return kExitUsage;
    }
    flex::verify::AuditOptions opts;
    opts.path_trials = trials;
    opts.seed = seed;
    opts.check_transitions = !no_transitions;
    const flex::verify::VerificationReport report = flex::verify::audit_map(map, net, opts);
    flex::io::write_file((out / "report.json").string(), flex::io::report_json(report));
    std::cout << flex::verify::report_text(report);
    return report.all_pass() ? kExitOk : kExitVerification;
}

int cmd_sample(const CommonConfig& cfg, int t, int n, std::uint64_t seed) {
    const flex::net::Network net = flex::net::load_network_file(cfg.net_path);
    if (t < 1 || t > net.demand.horizon()) {
        std::fprintf(stderr, "sample: period %d outside the demand horizon\n", t);
        return kExitUsage;
    }
    flex::model::ModelOptions opts;
    opts.network_limits = !cfg.no_network;
    opts.with_batteries = !cfg.no_batteries;
    const auto mc = flex::baselines::monte_carlo_region(net, t - 1, n, seed, opts, {},
                                                        flex::detail::thread_budget(0));

    const auto out = ensure_out_dir(cfg.out_dir);
    flex::io::write_file((out / "cloud.csv").string(), flex::io::cloud_csv(mc.cloud));
    std::ostringstream hull_csv;
    hull_csv << "p,q\n";
    char buf[80];
    for (const auto& v : mc.hull.vertices) {
        std::snprintf(buf, sizeof buf, "%.12g,%.12g\n", v.p, v.q);
        hull_csv << buf;
    }
    flex::io::write_file((out / "hull.csv").string(), hull_csv.str());

    const double area = mc.hull.size() >= 3 ? flex::geometry::shoelace(mc.hull) : 0.0;
    std::printf("samples: %d attempted, %d feasible; hull area %.6f p.u.^2\n",
                mc.cloud.attempted, mc.cloud.feasible, area);
    return kExitOk;
}

// TOML-like key=value configuration: '--config FILE' expands to '--key value'
// arguments for every key the command line does not already carry, so
// explicit flags win. Section headers and '#' comments are ignored.
std::vector<std::string> expand_config(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    std::string config_path;
    for (std::size_t i = 0; i + 1 < args.size(); ++i) {
        if (args[i] == "--config") {
            config_path = args[i + 1];
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i),
                       args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
            break;
        }
    }
    if (config_path.empty()) return args;

    std::istringstream in(flex::io::read_file(config_path));
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            const auto b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) continue;
        const std::string flag = "--" + key;
        if (std::find(args.begin(), args.end(), flag) != args.end()) continue;
        if (value == "true") {
            args.push_back(flag);
        } else {
            args.push_back(flag);
            args.push_back(value);
        }
    }
    return args;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-period PQ flexibility regions at the TSO-DSO interface"};
    app.require_subcommand(1);

    CommonConfig cfg;
    bool overlay = false;
    bool no_witnesses = false;

    CLI::App* solve = app.add_subcommand("solve", "compute a flexibility map");
    add_common(solve, cfg);
    solve->add_flag("--overlay", overlay, "also write one SVG with all periods");
    solve->add_flag("--no-witnesses", no_witnesses,
                    "omit the dispatch witnesses from map.json");

    CLI::App* compare = app.add_subcommand("compare", "solve variants and tabulate areas");
    std::vector<std::string> objectives{"linear", "surveyor"};
    std::vector<double> ramps;
    add_common(compare, cfg, /*with_objective=*/false);
    compare->add_option("--objectives", objectives, "objectives to compare")->delimiter(',');
    compare->add_option("--ramps", ramps, "ramp levels in percent (-1 for unconstrained)")
        ->delimiter(',');

    CLI::App* verify = app.add_subcommand("verify", "audit a previously computed map");
    std::string map_path;
    int trials = 100;
    std::uint64_t seed = 1;
    bool no_transitions = false;
    add_common(verify, cfg, /*with_objective=*/false);
    verify->add_option("--map", map_path, "map artifact (.json with witnesses, or .csv)")
        ->required();
    verify->add_option("--trials", trials, "random deployment paths to test");
    verify->add_option("--seed", seed, "RNG seed for path sampling");
    verify->add_flag("--no-transitions", no_transitions, "skip the vertex-transition sweep");

    CLI::App* sample = app.add_subcommand("sample", "Monte Carlo estimate of one period");
    int period = 1;
    int n = 10000;
    std::uint64_t sample_seed = 1;
    add_common(sample, cfg, /*with_objective=*/false);
    sample->add_option("--t", period, "period to sample (1-based)");
    sample->add_option("--n", n, "number of samples");
    sample->add_option("--seed", sample_seed, "RNG seed");

    try {
        std::vector<std::string> args = expand_config(argc, argv);
        std::reverse(args.begin(), args.end());  // CLI11 expects reversed argv
        app.parse(std::move(args));
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;  // stable contract: 1 means usage error
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    }

    try {
        if (solve->parsed()) return cmd_solve(cfg, overlay, no_witnesses);
        if (compare->parsed()) return cmd_compare(cfg, objectives, ramps);
        if (verify->parsed()) return cmd_verify(cfg, map_path, trials, seed, no_transitions);
        if (sample->parsed()) return cmd_sample(cfg, period, n, sample_seed);
    } catch (const flex::region::InfeasibleModel& e) {
        std::fprintf(stderr, "infeasible: %s\n", e.what());
        return kExitInfeasible;
    } catch (const flex::net::ParseError& e) {
        std::fprintf(stderr, "input error: %s\n", e.what());
        return kExitUsage;
    } catch (const flex::net::ValidationError& e) {
        std::fprintf(stderr, "input error: %s\n", e.what());
        return kExitUsage;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    }
    return kExitUsage;
}
