// enspace: batch front-end for the energy-space simulator and its audits.

#include <cstdio>
#include <exception>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/core.h>

#include "enspace/artifacts.hpp"
#include "enspace/config.hpp"
#include "enspace/run.hpp"
#include "enspace/study.hpp"
#include "enspace_presets.hpp"

namespace {

using namespace enspace;

constexpr int kExitConfig = 1;
constexpr int kExitSimulation = 2;

void print_summary(const RunResult& r, const fs::path& dir) {
    const auto& rep = r.report;
    fmt::print("scenario {} ({})\n", rep.scenario, rep.controller);
    fmt::print("  final i={:.6g} A  v={:.6g} V  u={:.6g} V\n", rep.final_state.i, rep.final_state.v, rep.final_state.u);
    if (rep.metrics)
        fmt::print("  settling {:.4g} s{}  overshoot {:.4g}  rms(y_z - y_ref) {:.4g}  max|du/dt| {:.4g} V/s\n",
                   rep.metrics->voltage.settling_time, rep.metrics->voltage.settled ? "" : " (never settles)",
                   rep.metrics->voltage.overshoot, rep.metrics->rms_tracking, rep.metrics->max_abs_du);
    const auto& f = rep.feasibility;
    if (f.violation)
        fmt::print("  feasibility VIOLATION at t={:.4f} s, window {}, {} axis, excess {:.4g}\n", f.violation->t,
                   f.violation->window, to_string(f.violation->axis), f.violation->excess);
    else
        fmt::print("  feasibility: no violation\n");
    for (const auto& a : rep.audits.results)
        fmt::print("  audit {:<22} {:<4}  worst margin {:.4g} at t={:.4g}\n", a.check, to_string(a.verdict),
                   a.worst_margin, a.t_worst);
    fmt::print("  artifacts in {}\n", dir.string());
}

fs::path scenario_dir(const fs::path& root, const std::string& name) {
    std::string safe = name.empty() ? "scenario" : name;
    for (char& c : safe)
        if (c == '/' || c == '\\') c = '_';
    return root / safe;
}

ScenarioConfig with_overrides(ScenarioConfig cfg, const std::vector<std::string>& sets) {
    for (const auto& s : sets) apply_override(cfg, s);
    return cfg;
}

int cmd_run(const ScenarioConfig& cfg, const std::string& out) {
    const auto sc = to_scenario(cfg);
    const auto r = run(sc);
    const auto dir = scenario_dir(resolve_output_dir(out, cfg.out_dir), cfg.name);
    write_run_artifacts(dir, r, cfg);
    print_summary(r, dir);
    return 0;
}

int cmd_compare(const std::vector<ScenarioConfig>& cfgs, const std::string& out) {
    check_comparable(cfgs);
    std::vector<Scenario> scs;
    for (const auto& c : cfgs) scs.push_back(to_scenario(c));
    const auto results = run_all(scs);
    const auto root = resolve_output_dir(out, cfgs.front().out_dir);
    fs::create_directories(root);
    std::ofstream csv(root / "compare.csv");
    csv << "run,scenario,controller,settling_time,settled,overshoot,rms_tracking,max_abs_du,feasible\n";
    fmt::print("{:<4} {:<22} {:<14} {:>12} {:>10} {:>12} {:>14} {:>10}\n", "#", "scenario", "controller", "settling[s]",
               "overshoot", "rms[W]", "max|du/dt|", "feasible");
    for (std::size_t k = 0; k < results.size(); ++k) {
        const auto row = compare_row(results[k]);
        const auto dir = scenario_dir(root, fmt::format("{}-{}", k + 1, cfgs[k].name));
        write_run_artifacts(dir, results[k], cfgs[k]);
        fmt::print("{:<4} {:<22} {:<14} {:>12.4g} {:>10.4g} {:>12.4g} {:>14.4g} {:>10}\n", k + 1, row.name,
                   row.controller, row.settling_time, row.overshoot, row.rms_tracking, row.max_abs_du,
                   row.feasible ? "yes" : "NO");
        csv << fmt::format("{},{},{},{},{},{},{},{},{}\n", k + 1, row.name, row.controller,
                           format_number(row.settling_time), row.settled ? "true" : "false",
                           format_number(row.overshoot), format_number(row.rms_tracking),
                           format_number(row.max_abs_du), row.feasible ? "true" : "false");
    }
    fmt::print("table written to {}\n", (root / "compare.csv").string());
    return 0;
}

int cmd_robustness(const ScenarioConfig& cfg, const std::string& param, double error, const std::string& out) {
    const auto rep = robustness_study(cfg, param, error);
    const auto root = scenario_dir(resolve_output_dir(out, cfg.out_dir), cfg.name);
    fs::create_directories(root);
    for (std::size_t k = 0; k < rep.rows.size(); ++k) {
        write_run_artifacts(root / rep.nominal[k].report.scenario, rep.nominal[k], cfg);
        write_run_artifacts(root / rep.perturbed[k].report.scenario, rep.perturbed[k], cfg);
    }
    std::ofstream csv(root / "robustness.csv");
    csv << "controller,param,error,offset_nominal,offset_perturbed,max_abs_du_nominal,max_abs_du_perturbed\n";
    fmt::print("controller model error: {} x (1 {:+g}); the plant keeps its true value\n", param, error);
    fmt::print("{:<14} {:>16} {:>18} {:>16} {:>18}\n", "controller", "offset nom [V]", "offset pert [V]",
               "max|du| nom", "max|du| pert");
    for (const auto& r : rep.rows) {
        fmt::print("{:<14} {:>16.4g} {:>18.4g} {:>16.4g} {:>18.4g}\n", r.controller, r.offset_nominal,
                   r.offset_perturbed, r.max_du_nominal, r.max_du_perturbed);
        csv << fmt::format("{},{},{},{},{},{},{}\n", r.controller, param, format_number(error),
                           format_number(r.offset_nominal), format_number(r.offset_perturbed),
                           format_number(r.max_du_nominal), format_number(r.max_du_perturbed));
    }
    fmt::print("chattering indicator max|du/dt| smc / fblc (perturbed): {:.4g}\n", rep.du_ratio("smc", "fblc"));
    fmt::print("artifacts in {}\n", root.string());
    return 0;
}

const PresetEntry* find_preset(const std::string& name) {
    for (const auto& p : kPresets)
        if (name == p.name) return &p;
    return nullptr;
}

int dispatch(int argc, char** argv) {
    CLI::App app{"enspace: energy-space control simulations, feasibility checks and audits"};
    app.require_subcommand(1);
    std::string out;
    std::vector<std::string> sets;

    auto* run_cmd = app.add_subcommand("run", "simulate one scenario config and write its artifacts");
    std::string config;
    run_cmd->add_option("config", config, "scenario INI file")->required();
    run_cmd->add_option("--set", sets, "override one key, section.key=value (repeatable)");
    run_cmd->add_option("--out", out, "output directory");

    auto* cmp_cmd = app.add_subcommand("compare", "run configs that differ only in [controller] side by side");
    std::vector<std::string> configs;
    cmp_cmd->add_option("configs", configs, "scenario INI files")->required();
    cmp_cmd->add_option("--out", out, "output directory");

    auto* rob_cmd = app.add_subcommand("robustness", "FBLC, SMC and Brayton-Moser with a controller-side model error");
    std::string param = "R";
    double error = 0.10;
    rob_cmd->add_option("config", config, "scenario INI file")->required();
    rob_cmd->add_option("--param", param, "R, L or C")->required();
    rob_cmd->add_option("--error", error, "relative error seen by the controllers")->required();
    rob_cmd->add_option("--set", sets, "override one key, section.key=value (repeatable)");
    rob_cmd->add_option("--out", out, "output directory");

    auto* pre_cmd = app.add_subcommand("preset", "run a built-in experiment");
    std::string preset;
    bool list = false, print = false;
    pre_cmd->add_option("name", preset, "preset name");
    pre_cmd->add_flag("--list", list, "list the presets");
    pre_cmd->add_flag("--print", print, "print the preset config instead of running it");
    pre_cmd->add_option("--set", sets, "override one key, section.key=value (repeatable)");
    pre_cmd->add_option("--out", out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    if (*run_cmd) return cmd_run(with_overrides(load_config_file(config), sets), out);
    if (*cmp_cmd) {
        std::vector<ScenarioConfig> cfgs;
        for (const auto& c : configs) cfgs.push_back(load_config_file(c));
        return cmd_compare(cfgs, out);
    }
    if (*rob_cmd) return cmd_robustness(with_overrides(load_config_file(config), sets), param, error, out);

    if (list || preset.empty()) {
        for (const auto& p : kPresets) fmt::print("{}\n", p.name);
        return preset.empty() && !list ? kExitConfig : 0;
    }
    const auto* p = find_preset(preset);
    if (!p) throw ConfigError("unknown preset '" + preset + "' (see enspace preset --list)");
    if (print) {
        std::cout << p->text;
        return 0;
    }
    const auto cfg = with_overrides(parse_config_string(p->text, preset + ".ini"), sets);
    if (preset == "robust-r10") return cmd_robustness(cfg, "R", 0.10, out);
    return cmd_run(cfg, out);
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return dispatch(argc, argv);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const ContractViolation& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const Error& e) {
        std::cerr << "simulation failed: " << e.what() << '\n';
        return kExitSimulation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitSimulation;
    }
}
