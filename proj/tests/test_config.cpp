#include <cmath>
#include <cstring>
#include <random>
#include <string>

#include <gtest/gtest.h>

#include "enspace/config.hpp"
#include "enspace/run.hpp"
#include "enspace/study.hpp"
#include "presets.hpp"

using namespace enspace;
using enspace::testing::preset_config;

namespace {

std::string error_of(const std::string& text) {
    try {
        (void)parse_config_string(text, "x.ini");
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

const char* kMinimal = R"(
[plant]
R = 0.01
L = 0.00112
C = 0.0068
[load]
kind = constant
[controller]
kind = fblc
[simulation]
t_end = 0.01
dt = 1e-5
)";

}  // namespace

TEST(Config, MinimalFileFillsDefaults) {
    const auto c = parse_config_string(kMinimal);
    EXPECT_EQ(c.controller, "fblc");
    EXPECT_EQ(c.power, 1200.0);
    EXPECT_EQ(c.v_ref, 80.0);
    EXPECT_FALSE(c.u0.has_value());
    EXPECT_NO_THROW((void)to_scenario(c));
}

TEST(Config, RoundTripOnRandomConfigs) {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> d(1e-6, 1e3);
    std::uniform_int_distribution<int> coin(0, 1);
    const char* kinds[] = {"fblc", "smc", "constant-gain", "brayton-moser"};
    for (int k = 0; k < 300; ++k) {
        ScenarioConfig c;
        c.R = d(rng);
        c.L = d(rng);
        c.C = 1.0 / 3.0 * d(rng);
        c.load_kind = coin(rng) ? "piecewise-linear" : "constant";
        c.times = {0, d(rng), 2e3 + d(rng)};
        c.powers = {d(rng), std::nextafter(1.0, 2.0), d(rng)};
        c.horizon = coin(rng) ? std::optional<double>(d(rng)) : std::nullopt;
        c.controller = kinds[k % 4];
        c.sampling = coin(rng) ? "stage" : "step";
        c.fblc_K = d(rng);
        c.smc_L_bar = coin(rng) ? std::optional<double>(d(rng)) : std::nullopt;
        c.smc_equivalent_control = coin(rng);
        c.cg_u_ref = coin(rng) ? std::optional<double>(-d(rng)) : std::nullopt;
        c.R_error = -0.5 + d(rng) / 1e3;
        c.name = "run-" + std::to_string(k);
        c.decimation = 1 + k;
        c.u0 = coin(rng) ? std::optional<double>(d(rng)) : std::nullopt;
        c.tau_prime = coin(rng) ? std::optional<double>(d(rng)) : std::nullopt;
        c.schedule_csv = coin(rng) ? "sched.csv" : "";
        c.plots = coin(rng);
        const auto text = emit_config_string(c);
        EXPECT_EQ(parse_config_string(text), c) << text;
    }
}

TEST(Config, PresetsRoundTrip) {
    for (const char* name : {"cpl-fblc", "cpl-smc", "cpl-constant-gain", "tv-fblc", "tv-smc", "tv-constant-gain",
                             "tv-brayton-moser", "robust-r10"}) {
        const auto c = preset_config(name);
        EXPECT_EQ(parse_config_string(emit_config_string(c)), c) << name;
        EXPECT_EQ(c.name, name);
    }
}

TEST(Config, DiagnosticsCarryLineAndKey) {
    EXPECT_EQ(error_of("[plant]\nR = 1\nfoo = 2\n"), "x.ini:3: unknown key 'foo' in [plant]");
    EXPECT_EQ(error_of("[plantt]\n"), "x.ini:1: unknown section [plantt]");
    EXPECT_EQ(error_of("[plant]\nR 1\n"), "x.ini:2: expected 'key = value'");
    EXPECT_EQ(error_of("R = 1\n"), "x.ini:1: key outside of any section");
    EXPECT_EQ(error_of("[plant]\nR = 1\nR = 2\n"), "x.ini:3: duplicate key 'R' in [plant]");
    EXPECT_NE(error_of("[plant]\nR = abc\n").find("x.ini:2: plant.R"), std::string::npos);
    EXPECT_NE(error_of("[controller]\nkind = pid\n").find("x.ini:2: controller.kind"), std::string::npos);
}

TEST(Config, MissingPlantSectionIsReported) {
    std::string text = kMinimal;
    text.erase(text.find("[plant]"), text.find("[load]") - text.find("[plant]"));
    EXPECT_EQ(error_of(text), "x.ini: missing section [plant]");
    std::string no_dt = kMinimal;
    no_dt.replace(no_dt.find("dt = 1e-5"), 9, "");
    EXPECT_EQ(error_of(no_dt), "x.ini: missing required key 'dt' in [simulation]");
}

TEST(Config, OverridesSetOneKey) {
    auto c = parse_config_string(kMinimal);
    apply_override(c, "controller.kind=smc");
    apply_override(c, " controller.smc_L_bar = 250 ");
    apply_override(c, "load.times=0, 0.5,1");
    apply_override(c, "simulation.u0=auto");
    EXPECT_EQ(c.controller, "smc");
    EXPECT_EQ(c.smc_L_bar, 250.0);
    EXPECT_EQ(c.times, (std::vector<double>{0, 0.5, 1}));
    EXPECT_FALSE(c.u0.has_value());
    EXPECT_THROW(apply_override(c, "controller.kind"), ConfigError);
    EXPECT_THROW(apply_override(c, "kind=smc"), ConfigError);
    EXPECT_THROW(apply_override(c, "plant.Rx=1"), ConfigError);
    EXPECT_THROW(apply_override(c, "simulation.decimation=1.5"), ConfigError);
}

TEST(Config, ScenarioPreconditionsBecomeConfigErrors) {
    auto c = parse_config_string(kMinimal);
    c.dt = -1;
    EXPECT_THROW((void)to_scenario(c), ConfigError);
    c = parse_config_string(kMinimal);
    c.load_kind = "piecewise-linear";
    EXPECT_THROW((void)to_scenario(c), ConfigError);
    c = parse_config_string(kMinimal);
    c.controller = "lqr";
    EXPECT_THROW((void)to_scenario(c), ConfigError);
}

TEST(Config, ControllerModelCarriesTheRelativeError) {
    auto c = parse_config_string(kMinimal);
    c.R_error = 0.1;
    c.C_error = -0.2;
    const auto sc = to_scenario(c);
    EXPECT_DOUBLE_EQ(sc.controller.model.R, 0.011);
    EXPECT_DOUBLE_EQ(sc.controller.model.L, 0.00112);
    EXPECT_DOUBLE_EQ(sc.controller.model.C, 0.0068 * 0.8);
    EXPECT_EQ(sc.plant.R, 0.01);
}

TEST(Compare, NeedsTwoConfigsDifferingOnlyInTheController) {
    const auto a = preset_config("tv-fblc");
    auto b = preset_config("tv-smc");
    EXPECT_THROW(check_comparable({a}), ConfigError);
    EXPECT_NO_THROW(check_comparable({a, b, preset_config("tv-constant-gain")}));
    b.out_dir = "elsewhere";
    EXPECT_NO_THROW(check_comparable({a, b}));
    b.t_end = 3.0;
    EXPECT_THROW(check_comparable({a, b}), ConfigError);
    EXPECT_THROW(check_comparable({a, preset_config("cpl-smc")}), ConfigError);
}

TEST(Compare, IdenticalConfigsGiveIdenticalRows) {
    auto c = preset_config("tv-fblc");
    c.t_end = 0.5;
    c.presettle = 0.1;
    const auto sc = to_scenario(c);
    const auto r = run_all({sc, sc});
    const auto a = compare_row(r[0]), b = compare_row(r[1]);
    EXPECT_EQ(a.settling_time, b.settling_time);
    EXPECT_EQ(a.overshoot, b.overshoot);
    EXPECT_EQ(a.rms_tracking, b.rms_tracking);
    EXPECT_EQ(a.max_abs_du, b.max_abs_du);
    EXPECT_EQ(a.feasible, b.feasible);
}

TEST(Robustness, ZeroErrorReproducesTheNominalRun) {
    auto c = preset_config("robust-r10");
    c.t_end = 0.5;
    c.presettle = 0.1;
    const auto rep = robustness_study(c, "R", 0.0);
    ASSERT_EQ(rep.rows.size(), 3u);
    for (std::size_t k = 0; k < rep.rows.size(); ++k) {
        const auto& n = rep.nominal[k].trajectory.samples;
        const auto& p = rep.perturbed[k].trajectory.samples;
        ASSERT_EQ(n.size(), p.size());
        EXPECT_EQ(0, std::memcmp(n.data(), p.data(), n.size() * sizeof(Sample))) << rep.rows[k].controller;
    }
    EXPECT_THROW((void)robustness_study(c, "Q", 0.1), ConfigError);
    EXPECT_THROW((void)robustness_study(c, "R", -1.0), ConfigError);
}

TEST(Robustness, PerturbationOnlyReachesTheController) {
    auto c = preset_config("robust-r10");
    c.t_end = 0.2;
    c.presettle = 0.0;
    const auto rep = robustness_study(c, "L", 0.25);
    for (const auto& r : rep.perturbed) {
        EXPECT_DOUBLE_EQ(r.scenario.controller.model.L, 1.25 * c.L);
        EXPECT_EQ(r.scenario.plant.L, c.L);
    }
}

namespace {

struct Golden {
    const char* name;
    double final_v, settling, rms, max_du;
    double violation;  ///< < 0 for none
};

}  // namespace

TEST(Presets, MetricsStayInTheirBands) {
    // Bands, not exact values: final voltage +-0.05 V, the other metrics +-10 % (settling +-20 %).
    const Golden g[] = {
        {"cpl-fblc", 80.0, 0.156, 71.97, 2.005e5, -1},
        {"cpl-smc", 80.032, 0.156, 60.65, 1.985e5, -1},
        {"cpl-constant-gain", 75.015, 0.018, 100.8, 1211, 0.0},
        {"tv-fblc", 80.0, 3.48, 0.814, 7822, -1},
        {"tv-smc", 80.017, 4.0, 1.621, 3.785e4, -1},
        {"tv-constant-gain", 75.91, 3.35, 101.0, 442.3, 0.332},
        {"tv-brayton-moser", 80.002, 4.0, 1.164, 1.473e5, -1},
    };
    for (const auto& x : g) {
        const auto r = run(to_scenario(preset_config(x.name)));
        const auto& m = *r.report.metrics;
        EXPECT_NEAR(m.voltage.final_value, x.final_v, 0.05) << x.name;
        EXPECT_NEAR(m.voltage.settling_time, x.settling, 0.2 * x.settling + 1e-3) << x.name;
        EXPECT_NEAR(m.rms_tracking, x.rms, 0.1 * x.rms) << x.name;
        EXPECT_NEAR(m.max_abs_du, x.max_du, 0.1 * x.max_du) << x.name;
        const auto& v = r.report.feasibility.violation;
        if (x.violation < 0) EXPECT_FALSE(v.has_value()) << x.name;
        else {
            ASSERT_TRUE(v.has_value()) << x.name;
            EXPECT_NEAR(v->t, x.violation, 0.01) << x.name;
        }
    }
}
