#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "enspace/config.hpp"
#include "enspace/run.hpp"
#include "enspace/svg.hpp"

namespace enspace {

namespace fs = std::filesystem;

/// Precedence: explicit --out, then ENSPACE_OUT, then [output] dir, then "enspace-out".
[[nodiscard]] inline fs::path resolve_output_dir(const std::string& cli_out, const std::string& config_dir) {
    if (!cli_out.empty()) return cli_out;
    if (const char* env = std::getenv("ENSPACE_OUT"); env && *env) return env;
    if (!config_dir.empty()) return config_dir;
    return "enspace-out";
}

namespace artifacts_detail {

inline std::ofstream open(const fs::path& p) {
    std::ofstream f(p);
    if (!f) throw Error("cannot write '" + p.string() + "'");
    return f;
}

inline std::vector<double> column(const std::vector<Sample>& s, double (*get)(const Sample&)) {
    std::vector<double> out;
    out.reserve(s.size());
    for (const auto& x : s) out.push_back(get(x));
    return out;
}

inline void chart(const fs::path& p, svg::Chart c) {
    auto f = open(p);
    svg::write_chart(f, c);
}

/// Step-shaped band over the windows of the schedule, clipped to [t0, t1].
inline svg::Band schedule_band(const RangeSchedule& s, bool P_axis, double t0, double t1) {
    svg::Band b;
    b.label = P_axis ? "incoming range P" : "incoming range Qd";
    for (std::size_t k = 0; k < s.boxes.size(); ++k) {
        const double a = std::max(t0, s.t_start + k * s.window);
        const double e = std::min(t1, s.t_start + (k + 1) * s.window);
        if (!(e > a)) continue;
        const auto& x = s.boxes[k];
        for (double t : {a, e}) {
            b.x.push_back(t);
            b.lo.push_back(P_axis ? x.P_lo : x.Qd_lo);
            b.hi.push_back(P_axis ? x.P_hi : x.Qd_hi);
        }
    }
    return b;
}

}  // namespace artifacts_detail

/// Writes every plot of one run into `dir`.
inline void write_plots(const fs::path& dir, const RunResult& r) {
    using namespace artifacts_detail;
    const auto& s = r.trajectory.samples;
    if (s.empty()) return;
    const auto t = column(s, [](const Sample& x) { return x.t; });
    const std::string name = r.report.scenario + " (" + r.report.controller + ")";
    auto single = [&](const char* file, const char* title, const char* ylabel, double (*get)(const Sample&)) {
        chart(dir / file, {std::string(title) + ", " + name, "t [s]", ylabel, {}, {{title, t, column(s, get)}}});
    };
    single("i.svg", "source current i", "A", [](const Sample& x) { return x.i; });
    single("v.svg", "terminal voltage v", "V", [](const Sample& x) { return x.v; });
    single("u.svg", "control input u", "V", [](const Sample& x) { return x.u; });
    single("du_dt.svg", "control rate du/dt", "V/s", [](const Sample& x) { return x.du; });
    chart(dir / "y_z.svg", {"energy output, " + name,
                            "t [s]",
                            "W",
                            {},
                            {{"y_z", t, column(s, [](const Sample& x) { return x.y_z; })},
                             {"y_ref", t, column(s, [](const Sample& x) { return x.y_ref; }), "#d62728"}}});
    const auto& sched = r.report.feasibility.schedule;
    const double t0 = s.front().t, t1 = s.back().t;
    chart(dir / "interaction_P.svg",
          {"outgoing power vs incoming range, " + name,
           "t [s]",
           "W",
           {schedule_band(sched, true, t0, t1)},
           {{"P out", t, column(s, [](const Sample& x) { return x.out1.P; })}}});
    chart(dir / "interaction_Qd.svg",
          {"outgoing reactive rate vs incoming range, " + name,
           "t [s]",
           "W/s",
           {schedule_band(sched, false, t0, t1)},
           {{"Qd out", t, column(s, [](const Sample& x) { return x.out1.Qd; })}}});
}

/// trajectory.csv, report.txt, audit.csv, schedule.csv, load.csv, scenario.ini and (optionally) plots.
inline void write_run_artifacts(const fs::path& dir, const RunResult& r, const ScenarioConfig& cfg) {
    using artifacts_detail::open;
    fs::create_directories(dir);
    {
        auto f = open(dir / "trajectory.csv");
        write_trajectory_csv(f, r);
    }
    {
        auto f = open(dir / "report.txt");
        write_key_values(f, r.report.to_key_values());
    }
    {
        auto f = open(dir / "audit.csv");
        write_audit_csv(f, r.report.audits);
    }
    {
        auto f = open(dir / "schedule.csv");
        write_schedule_csv(f, r.report.feasibility.schedule);
    }
    {
        auto f = open(dir / "load.csv");
        r.scenario.load.write_csv(f);
    }
    {
        auto f = open(dir / "scenario.ini");
        emit_config(f, cfg);
    }
    if (cfg.plots) write_plots(dir, r);
}

}  // namespace enspace
