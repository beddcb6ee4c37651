#pragma once

#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "enspace/feasibility.hpp"
#include "enspace/simulator.hpp"
#include "enspace/trajectory.hpp"
#include "enspace/verification.hpp"

namespace enspace {

/// Ordered key=value pairs; the text form of every report.
using KeyValues = std::vector<std::pair<std::string, std::string>>;

inline std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    std::ostringstream os;
    os.precision(10);
    os << x;
    return os.str();
}

inline void write_key_values(std::ostream& os, const KeyValues& kv, const std::string& prefix = "") {
    for (const auto& [k, v] : kv) os << prefix << k << '=' << v << '\n';
}

struct FeasibilityReport {
    double tau_prime = std::numeric_limits<double>::quiet_NaN();
    RangeSchedule schedule;
    std::vector<WindowVerdict> windows;
    std::optional<Violation> violation;  ///< pointwise scan, both axes
    bool set_feasible = true;
    bool pointwise_feasible = true;
};

struct RunReport {
    std::string scenario;
    std::string controller;
    std::size_t samples = 0;
    std::size_t steps = 0;
    double L_bar = 0.0;
    double u_ref = 0.0;
    RlcState initial;
    RlcState final_state;
    std::optional<RunMetrics> metrics;
    FeasibilityReport feasibility;
    AuditReport audits;
    std::optional<ReachingResult> reaching;
    std::string reaching_error;
    std::vector<WindowMargin> lyapunov_windows;
    double junction_rel_P = 0.0;
    double junction_rel_Qd = 0.0;
    std::optional<EnergyResidual> tail_residual;

    [[nodiscard]] KeyValues to_key_values() const;
};

struct RunResult {
    Scenario scenario;  ///< with automatic settings resolved
    Trajectory trajectory;
    RunReport report;
};

/// Gain K that the dissipativity supply uses for this controller.
[[nodiscard]] inline double supply_gain(const ControllerSpec& c) {
    switch (c.kind) {
        case ControllerKind::Fblc: return c.fblc.K;
        case ControllerKind::Smc: return c.smc.K;
        default: return c.effective_gain();
    }
}

[[nodiscard]] inline RangeSchedule resolve_schedule(const Scenario& sc, double tau_p) {
    if (!sc.feasibility.schedule_csv.empty()) {
        std::ifstream f(sc.feasibility.schedule_csv);
        if (!f) throw ConfigError("cannot open schedule CSV '" + sc.feasibility.schedule_csv + "'");
        return read_schedule_csv(f);
    }
    if (sc.t_end <= 0.0) return RangeSchedule{sc.feasibility.window, 0.0, {}};
    return schedule_from_profile(sc.load, sc.feasibility.window, sc.t_end, tau_p);
}

/// Runs every audit that applies to the recorded trajectory.
[[nodiscard]] inline AuditReport audit_run(const Scenario& sc, const Trajectory& tr, RunReport* rep = nullptr) {
    AuditReport a;
    const auto& s = tr.samples;
    const auto& c = sc.controller;
    if (s.size() < 3) return a;
    const double K = supply_gain(c);

    if (c.kind == ControllerKind::Smc)
        a.results.push_back(audit_dissipativity_sliding(s, K, 2.0 * c.smc.alpha() * sc.dt));
    else
        a.results.push_back(audit_dissipativity_feedback(s, K));
    a.results.push_back(audit_dissipativity_storage(s));

    if (c.kind == ControllerKind::Fblc) {
        double scale = 1.0;
        for (const auto& x : s) scale = std::max(scale, std::abs(x.y_ref));
        a.results.push_back(audit_fblc_stability(s, K, 1e-9 * scale));
    }
    if (c.kind == ControllerKind::Smc) {
        AuditResult r;
        r.check = "smc_reaching";
        r.inequality = "t_reach <= (2 / K) |sigma(0)|";
        try {
            const auto rr = audit_smc_reaching(s, c.smc.K);
            r.verdict = rr.verdict;
            r.worst_margin = rr.bound_theorem - (rr.t_reach - s.front().t);
            r.t_worst = rr.t_reach;
            r.evaluated = 1;
            r.note = "proof bound (sqrt 2 / K) |sigma(0)|: " + std::string(to_string(rr.verdict_proof));
            if (rep) rep->reaching = rr;
        } catch (const NoReaching& e) {
            r.verdict = Verdict::Fail;
            r.note = e.what();
            if (rep) rep->reaching_error = e.what();
        }
        a.results.push_back(r);
    }

    std::vector<double> t;
    for (const auto& x : s) t.push_back(x.t);
    Eigen::MatrixXd adj(2, 2);
    adj << 0, 1, 1, 0;
    auto net = audit_network_lyapunov(t, source_load_storages(s), adj, sc.feasibility.window);
    if (rep) rep->lyapunov_windows = net.windows;
    a.results.push_back(std::move(net.result));
    return a;
}

/// Simulates the scenario and assembles its report. Guard failures propagate as SimulationFailure.
[[nodiscard]] inline RunResult run(const Scenario& scenario) {
    Simulator sim(scenario);
    RunResult out;
    out.scenario = sim.scenario();
    out.trajectory = sim.run();
    const auto& sc = out.scenario;
    const auto& tr = out.trajectory;
    auto& rep = out.report;

    rep.scenario = sc.name;
    rep.controller = to_string(sc.controller.kind);
    rep.samples = tr.samples.size();
    rep.steps = tr.stats.steps;
    rep.L_bar = sc.controller.smc.L_bar;
    rep.u_ref = sc.controller.constant_gain.u_ref;
    rep.initial = sim.initial_state();
    rep.final_state = rep.initial;
    if (!tr.empty()) {
        rep.final_state = {tr.samples.back().i, tr.samples.back().v, tr.samples.back().u};
        rep.metrics = metrics(tr);
    }

    auto& f = rep.feasibility;
    f.tau_prime = std::isnan(sc.feasibility.tau_prime) ? tau_prime(sc.plant, sc.controller.effective_gain())
                                                        : sc.feasibility.tau_prime;
    f.schedule = resolve_schedule(sc, f.tau_prime);
    f.windows = window_verdicts(tr.samples, f.schedule);
    for (const auto& w : f.windows) f.set_feasible = f.set_feasible && w.containment.feasible;
    f.violation = detect_violation(tr.samples, f.schedule, Axis::Both);
    f.pointwise_feasible = !f.violation.has_value();

    if (tr.stats.peak_P > 0.0) rep.junction_rel_P = tr.stats.max_junction_P / tr.stats.peak_P;
    if (tr.stats.peak_Qd > 0.0) rep.junction_rel_Qd = tr.stats.max_junction_Qd / tr.stats.peak_Qd;
    if (tr.tail.size() >= 3) rep.tail_residual = energy_trajectory_residual(tr.tail, tr.dt);

    rep.audits = audit_run(sc, tr, &rep);

    AuditResult set;
    set.check = "feasibility_set";
    set.inequality = "Z_out[k] subset of Z_in[k] for every window";
    AuditResult point;
    point.check = "feasibility_pointwise";
    point.inequality = "z_out(t) in Z_in[k(t)] for every sample (margin in box half-widths)";
    if (!f.windows.empty()) {
        set.verdict = f.set_feasible ? Verdict::Pass : Verdict::Fail;
        for (const auto& w : f.windows) {
            set.evaluated += w.outgoing.has_value();
            if (w.outgoing && w.containment.margin < set.worst_margin) {
                set.worst_margin = w.containment.margin;
                set.t_worst = w.t_start;
            }
        }
        point.verdict = f.pointwise_feasible ? Verdict::Pass : Verdict::Fail;
        point.evaluated = tr.samples.size();
        const auto pm = pointwise_margin(tr.samples, f.schedule);
        point.worst_margin = pm.margin;
        point.t_worst = pm.t;
        if (f.violation) {
            point.t_first_fail = f.violation->t;
            point.note = std::string("first violation on the ") + to_string(f.violation->axis) + " axis";
        }
    }
    rep.audits.results.push_back(set);
    rep.audits.results.push_back(point);
    return out;
}

inline KeyValues RunReport::to_key_values() const {
    KeyValues kv;
    auto put = [&kv](std::string k, std::string v) { kv.emplace_back(std::move(k), std::move(v)); };
    auto num = [&put](std::string k, double v) { put(std::move(k), format_number(v)); };
    put("scenario", scenario);
    put("controller", controller);
    put("samples", std::to_string(samples));
    put("steps", std::to_string(steps));
    if (controller == "smc") num("smc_L_bar", L_bar);
    if (controller == "constant-gain") num("cg_u_ref", u_ref);
    num("initial.i", initial.i);
    num("initial.v", initial.v);
    num("initial.u", initial.u);
    num("final.i", final_state.i);
    num("final.v", final_state.v);
    num("final.u", final_state.u);
    if (metrics) {
        num("metrics.settling_time", metrics->voltage.settling_time);
        put("metrics.settled", metrics->voltage.settled ? "true" : "false");
        num("metrics.overshoot", metrics->voltage.overshoot);
        num("metrics.peak_deviation_v", metrics->voltage.peak_deviation);
        num("metrics.final_v", metrics->voltage.final_value);
        num("metrics.rms_tracking", metrics->rms_tracking);
        num("metrics.max_abs_du", metrics->max_abs_du);
        num("metrics.t_max_abs_du", metrics->t_max_abs_du);
    }
    num("feasibility.tau_prime", feasibility.tau_prime);
    put("feasibility.windows", std::to_string(feasibility.windows.size()));
    put("feasibility.set", feasibility.set_feasible ? "FEASIBLE" : "INFEASIBLE");
    put("feasibility.pointwise", feasibility.pointwise_feasible ? "FEASIBLE" : "INFEASIBLE");
    if (feasibility.violation) {
        num("feasibility.violation.t", feasibility.violation->t);
        put("feasibility.violation.window", std::to_string(feasibility.violation->window));
        put("feasibility.violation.axis", to_string(feasibility.violation->axis));
        num("feasibility.violation.value", feasibility.violation->value);
        num("feasibility.violation.excess", feasibility.violation->excess);
    }
    num("junction.rel_P", junction_rel_P);
    num("junction.rel_Qd", junction_rel_Qd);
    if (tail_residual) {
        num("energy_residual.tail_E", tail_residual->row_E);
        num("energy_residual.tail_p", tail_residual->row_p);
    }
    if (reaching) {
        num("reaching.sigma0", reaching->sigma0);
        num("reaching.t_reach", reaching->t_reach);
        num("reaching.bound_theorem", reaching->bound_theorem);
        num("reaching.bound_proof", reaching->bound_proof);
        put("reaching.verdict_proof", to_string(reaching->verdict_proof));
    }
    for (const auto& r : audits.results) {
        const std::string p = "audit." + r.check + ".";
        put(p + "verdict", to_string(r.verdict));
        put(p + "inequality", r.inequality);
        num(p + "worst_margin", r.worst_margin);
        num(p + "t_worst", r.t_worst);
        num(p + "t_first_fail", r.t_first_fail);
        num(p + "tolerance", r.tolerance);
        put(p + "evaluated", std::to_string(r.evaluated));
        put(p + "skipped", std::to_string(r.skipped));
        put(p + "boundary", std::to_string(r.boundary));
        if (!r.note.empty()) put(p + "note", r.note);
    }
    for (const auto& w : lyapunov_windows) {
        const std::string p = "lyapunov.window" + std::to_string(w.k) + ".";
        put(p + "verdict", w.pass ? "PASS" : "FAIL");
        num(p + "worst_margin", w.worst_margin);
    }
    return kv;
}

/// Trajectory CSV with the report embedded as '# key=value' header lines.
inline void write_trajectory_csv(std::ostream& os, const RunResult& r) {
    write_key_values(os, r.report.to_key_values(), "# ");
    write_samples_csv(os, r.trajectory.samples);
}

}  // namespace enspace
