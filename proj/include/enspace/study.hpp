#pragma once

#include <future>
#include <string>
#include <vector>

#include "enspace/config.hpp"
#include "enspace/run.hpp"

namespace enspace {

/// Runs independent scenarios concurrently; results keep the input order.
[[nodiscard]] inline std::vector<RunResult> run_all(const std::vector<Scenario>& scenarios) {
    std::vector<std::future<RunResult>> jobs;
    for (const auto& sc : scenarios) jobs.push_back(std::async(std::launch::async, [&sc] { return run(sc); }));
    std::vector<RunResult> out;
    for (auto& j : jobs) out.push_back(j.get());
    return out;
}

struct CompareRow {
    std::string name;
    std::string controller;
    double settling_time = 0.0;
    bool settled = false;
    double overshoot = 0.0;
    double rms_tracking = 0.0;
    double max_abs_du = 0.0;
    bool feasible = true;
};

[[nodiscard]] inline CompareRow compare_row(const RunResult& r) {
    CompareRow row;
    row.name = r.report.scenario;
    row.controller = r.report.controller;
    if (r.report.metrics) {
        const auto& m = *r.report.metrics;
        row.settling_time = m.voltage.settling_time;
        row.settled = m.voltage.settled;
        row.overshoot = m.voltage.overshoot;
        row.rms_tracking = m.rms_tracking;
        row.max_abs_du = m.max_abs_du;
    }
    row.feasible = r.report.feasibility.pointwise_feasible && r.report.feasibility.set_feasible;
    return row;
}

/// Throws ConfigError unless there are at least two configs and they differ only in [controller]
/// (and in the scenario name or [output]).
inline void check_comparable(const std::vector<ScenarioConfig>& cfgs) {
    if (cfgs.size() < 2) throw ConfigError("compare needs at least two configs");
    const auto ref = experiment_signature(cfgs.front());
    for (std::size_t k = 1; k < cfgs.size(); ++k)
        if (experiment_signature(cfgs[k]) != ref)
            throw ConfigError("config " + std::to_string(k + 1) + " differs from the first outside [controller]");
}

enum class ModelParam { R, L, C };

[[nodiscard]] inline ModelParam model_param_from_string(const std::string& s) {
    if (s == "R") return ModelParam::R;
    if (s == "L") return ModelParam::L;
    if (s == "C") return ModelParam::C;
    throw ConfigError("robustness parameter must be R, L or C, got '" + s + "'");
}

struct RobustnessRow {
    std::string controller;
    double offset_nominal = 0.0;    ///< mean v over the last 10 % minus v_ref
    double offset_perturbed = 0.0;
    double max_du_nominal = 0.0;
    double max_du_perturbed = 0.0;
    double L_bar = 0.0;  ///< SMC only, perturbed run
};

struct RobustnessReport {
    std::string param;
    double error = 0.0;
    std::vector<RobustnessRow> rows;
    std::vector<RunResult> nominal, perturbed;

    /// max |du/dt| of `a` over that of `b`, both perturbed.
    [[nodiscard]] double du_ratio(const std::string& a, const std::string& b) const {
        const RobustnessRow *ra = nullptr, *rb = nullptr;
        for (const auto& r : rows) {
            if (r.controller == a) ra = &r;
            if (r.controller == b) rb = &r;
        }
        if (!ra || !rb || rb->max_du_perturbed <= 0.0) return std::numeric_limits<double>::quiet_NaN();
        return ra->max_du_perturbed / rb->max_du_perturbed;
    }
    [[nodiscard]] const RobustnessRow* find(const std::string& c) const {
        for (const auto& r : rows)
            if (r.controller == c) return &r;
        return nullptr;
    }
};

/// Runs FBLC, SMC and Brayton-Moser on the base scenario twice: with the config's controller model
/// and with one model parameter scaled by (1 + error). The plant is never changed.
[[nodiscard]] inline RobustnessReport robustness_study(const ScenarioConfig& base, const std::string& param,
                                                      double error) {
    const auto which = model_param_from_string(param);
    if (!(error > -1.0)) throw ConfigError("robustness error fraction must exceed -1");
    RobustnessReport rep;
    rep.param = param;
    rep.error = error;
    std::vector<Scenario> nominal, perturbed;
    const char* kinds[] = {"fblc", "smc", "brayton-moser"};
    for (const char* k : kinds) {
        ScenarioConfig c = base;
        c.controller = k;
        c.name = base.name + "-" + k;
        nominal.push_back(to_scenario(c));
        c.name += "-perturbed";
        double& e = which == ModelParam::R ? c.R_error : which == ModelParam::L ? c.L_error : c.C_error;
        e = (1.0 + e) * (1.0 + error) - 1.0;
        perturbed.push_back(to_scenario(c));
    }
    std::vector<Scenario> all = nominal;
    all.insert(all.end(), perturbed.begin(), perturbed.end());
    auto results = run_all(all);
    for (std::size_t k = 0; k < nominal.size(); ++k) {
        const auto& n = results[k];
        const auto& p = results[k + nominal.size()];
        RobustnessRow row;
        row.controller = kinds[k];
        const double v_ref = n.scenario.controller.v_ref;
        if (n.report.metrics) {
            row.offset_nominal = n.report.metrics->voltage.final_value - v_ref;
            row.max_du_nominal = n.report.metrics->max_abs_du;
        }
        if (p.report.metrics) {
            row.offset_perturbed = p.report.metrics->voltage.final_value - v_ref;
            row.max_du_perturbed = p.report.metrics->max_abs_du;
        }
        row.L_bar = p.scenario.controller.smc.L_bar;
        rep.rows.push_back(row);
        rep.nominal.push_back(n);
        rep.perturbed.push_back(p);
    }
    return rep;
}

}  // namespace enspace
