#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "enspace/errors.hpp"
#include "enspace/simulator.hpp"

namespace enspace {

// Grammar (one statement per line):
//   [section]
//   key = value          ; or # starts a comment line
// Numbers are SI. Lists are comma separated. "auto" marks a value resolved at run time.

struct ScenarioConfig {
    // [plant]
    double R = 0.01, L = 1.12e-3, C = 6.8e-3;
    // [load]
    std::string load_kind = "constant";
    double power = 1200.0;
    std::vector<double> times, powers;
    std::optional<double> horizon;
    std::string load_csv;
    double matched_power = 0.0;
    // [controller]
    std::string controller = "fblc";
    double v_ref = 80.0;
    std::string reference = "regulation";
    std::string sampling = "step";
    double fblc_K = 100.0, fblc_eta_error = 0.0;
    double smc_K = 100.0;
    std::optional<double> smc_L_bar;
    double smc_safety = 1.5, smc_boundary_layer = 0.0, smc_eta_error = 0.0;
    bool smc_equivalent_control = true;
    double cg_K1 = 0.4512, cg_K2 = 0.45;
    std::optional<double> cg_u_ref;
    double bm_K1 = 1.0, bm_K2 = 1.0, bm_K3 = 1.0, bm_Pi = 1600.0;
    double R_error = 0.0, L_error = 0.0, C_error = 0.0;
    // [simulation]
    std::string name = "scenario";
    double t_end = 1.0, dt = 1e-5;
    int decimation = 100;
    int tail_steps = 10000;
    double i0 = 1.0, v0 = 80.0;
    std::optional<double> u0;
    double presettle = 0.0;
    // [feasibility]
    double window = 1.0;
    std::optional<double> tau_prime;
    std::string schedule_csv;
    // [output]
    std::string out_dir;
    bool plots = true;

    friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

namespace config_detail {

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

inline double parse_double(const std::string& v) {
    double x = 0.0;
    const auto* end = v.data() + v.size();
    auto [p, ec] = std::from_chars(v.data(), end, x);
    if (ec != std::errc() || p != end || !std::isfinite(x)) throw ConfigError("'" + v + "' is not a finite number");
    return x;
}

inline std::string format_double(double x) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, p);
}

inline int parse_int(const std::string& v) {
    int x = 0;
    const auto* end = v.data() + v.size();
    auto [p, ec] = std::from_chars(v.data(), end, x);
    if (ec != std::errc() || p != end) throw ConfigError("'" + v + "' is not an integer");
    return x;
}

inline bool parse_bool(const std::string& v) {
    if (v == "true" || v == "yes" || v == "1") return true;
    if (v == "false" || v == "no" || v == "0") return false;
    throw ConfigError("'" + v + "' is not a boolean (true/false)");
}

inline std::vector<double> parse_list(const std::string& v) {
    std::vector<double> out;
    if (trim(v).empty()) return out;
    std::stringstream ss(v);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(parse_double(trim(cell)));
    return out;
}

inline std::string format_list(const std::vector<double>& v) {
    std::string s;
    for (std::size_t k = 0; k < v.size(); ++k) s += (k ? ", " : "") + format_double(v[k]);
    return s;
}

inline std::string check_choice(const std::string& v, std::initializer_list<const char*> allowed) {
    for (const char* a : allowed)
        if (v == a) return v;
    std::string msg = "'" + v + "' is not one of:";
    for (const char* a : allowed) msg += std::string(" ") + a;
    throw ConfigError(msg);
}

struct Field {
    const char* section;
    const char* key;
    bool required;
    std::function<void(ScenarioConfig&, const std::string&)> set;
    std::function<std::string(const ScenarioConfig&)> get;
};

template <class T>
Field num(const char* sec, const char* key, T ScenarioConfig::*m, bool required = false) {
    return {sec, key, required, [m](ScenarioConfig& c, const std::string& v) {
                if constexpr (std::is_same_v<T, int>) c.*m = parse_int(v);
                else c.*m = parse_double(v);
            },
            [m](const ScenarioConfig& c) {
                if constexpr (std::is_same_v<T, int>) return std::to_string(c.*m);
                else return format_double(c.*m);
            }};
}

inline Field opt(const char* sec, const char* key, std::optional<double> ScenarioConfig::*m) {
    return {sec, key, false,
            [m](ScenarioConfig& c, const std::string& v) {
                if (v == "auto") c.*m = std::nullopt;
                else c.*m = parse_double(v);
            },
            [m](const ScenarioConfig& c) { return c.*m ? format_double(*(c.*m)) : std::string("auto"); }};
}

inline Field str(const char* sec, const char* key, std::string ScenarioConfig::*m, bool required = false,
                 std::initializer_list<const char*> choices = {}) {
    std::vector<std::string> allowed(choices.begin(), choices.end());
    return {sec, key, required,
            [m, allowed](ScenarioConfig& c, const std::string& v) {
                if (!allowed.empty() && std::find(allowed.begin(), allowed.end(), v) == allowed.end()) {
                    std::string msg = "'" + v + "' is not one of:";
                    for (const auto& a : allowed) msg += " " + a;
                    throw ConfigError(msg);
                }
                c.*m = v;
            },
            [m](const ScenarioConfig& c) { return c.*m; }};
}

inline Field flag(const char* sec, const char* key, bool ScenarioConfig::*m) {
    return {sec, key, false, [m](ScenarioConfig& c, const std::string& v) { c.*m = parse_bool(v); },
            [m](const ScenarioConfig& c) { return std::string(c.*m ? "true" : "false"); }};
}

inline Field list(const char* sec, const char* key, std::vector<double> ScenarioConfig::*m) {
    return {sec, key, false, [m](ScenarioConfig& c, const std::string& v) { c.*m = parse_list(v); },
            [m](const ScenarioConfig& c) { return format_list(c.*m); }};
}

inline const std::vector<Field>& schema() {
    using C = ScenarioConfig;
    static const std::vector<Field> f{
        num("plant", "R", &C::R, true),
        num("plant", "L", &C::L, true),
        num("plant", "C", &C::C, true),
        str("load", "kind", &C::load_kind, true, {"constant", "piecewise-linear", "piecewise-constant"}),
        num("load", "power", &C::power),
        list("load", "times", &C::times),
        list("load", "powers", &C::powers),
        opt("load", "horizon", &C::horizon),
        str("load", "csv", &C::load_csv),
        num("load", "matched_power", &C::matched_power),
        str("controller", "kind", &C::controller, true, {"fblc", "smc", "constant-gain", "brayton-moser"}),
        num("controller", "v_ref", &C::v_ref),
        str("controller", "reference", &C::reference, false, {"regulation", "interaction"}),
        str("controller", "sampling", &C::sampling, false, {"step", "stage"}),
        num("controller", "fblc_K", &C::fblc_K),
        num("controller", "fblc_eta_error", &C::fblc_eta_error),
        num("controller", "smc_K", &C::smc_K),
        opt("controller", "smc_L_bar", &C::smc_L_bar),
        num("controller", "smc_safety", &C::smc_safety),
        num("controller", "smc_boundary_layer", &C::smc_boundary_layer),
        flag("controller", "smc_equivalent_control", &C::smc_equivalent_control),
        num("controller", "smc_eta_error", &C::smc_eta_error),
        num("controller", "cg_K1", &C::cg_K1),
        num("controller", "cg_K2", &C::cg_K2),
        opt("controller", "cg_u_ref", &C::cg_u_ref),
        num("controller", "bm_K1", &C::bm_K1),
        num("controller", "bm_K2", &C::bm_K2),
        num("controller", "bm_K3", &C::bm_K3),
        num("controller", "bm_Pi", &C::bm_Pi),
        num("controller", "R_error", &C::R_error),
        num("controller", "L_error", &C::L_error),
        num("controller", "C_error", &C::C_error),
        str("simulation", "name", &C::name),
        num("simulation", "t_end", &C::t_end, true),
        num("simulation", "dt", &C::dt, true),
        num("simulation", "decimation", &C::decimation),
        num("simulation", "tail_steps", &C::tail_steps),
        num("simulation", "i0", &C::i0),
        num("simulation", "v0", &C::v0),
        opt("simulation", "u0", &C::u0),
        num("simulation", "presettle", &C::presettle),
        num("feasibility", "window", &C::window),
        opt("feasibility", "tau_prime", &C::tau_prime),
        str("feasibility", "schedule_csv", &C::schedule_csv),
        str("output", "dir", &C::out_dir),
        flag("output", "plots", &C::plots),
    };
    return f;
}

inline const Field* find_field(const std::string& section, const std::string& key) {
    for (const auto& f : schema())
        if (section == f.section && key == f.key) return &f;
    return nullptr;
}

}  // namespace config_detail

inline const std::vector<std::string>& config_sections() {
    static const std::vector<std::string> s{"plant", "load", "controller", "simulation", "feasibility", "output"};
    return s;
}

/// Sets one key; `path` is "section.key".
inline void apply_override(ScenarioConfig& cfg, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' must look like section.key=value");
    const std::string path = config_detail::trim(assignment.substr(0, eq));
    const std::string value = config_detail::trim(assignment.substr(eq + 1));
    const auto dot = path.find('.');
    if (dot == std::string::npos) throw ConfigError("override '" + assignment + "' must look like section.key=value");
    const auto* f = config_detail::find_field(path.substr(0, dot), path.substr(dot + 1));
    if (!f) throw ConfigError("override: unknown key '" + path + "'");
    try {
        f->set(cfg, value);
    } catch (const ConfigError& e) {
        throw ConfigError("override " + path + ": " + e.what());
    }
}

/// Parses the INI text. `origin` prefixes diagnostics (typically the file name).
inline ScenarioConfig parse_config(std::istream& is, const std::string& origin = "config") {
    ScenarioConfig cfg;
    std::string line, section;
    std::set<std::string> seen_sections;
    std::set<std::pair<std::string, std::string>> seen_keys;
    int lineno = 0;
    auto fail = [&](const std::string& msg) { throw ConfigError(origin + ":" + std::to_string(lineno) + ": " + msg); };
    while (std::getline(is, line)) {
        ++lineno;
        const std::string s = config_detail::trim(line);
        if (s.empty() || s[0] == '#' || s[0] == ';') continue;
        if (s.front() == '[') {
            if (s.back() != ']') fail("unterminated section header");
            section = config_detail::trim(s.substr(1, s.size() - 2));
            if (std::find(config_sections().begin(), config_sections().end(), section) == config_sections().end())
                fail("unknown section [" + section + "]");
            if (!seen_sections.insert(section).second) fail("duplicate section [" + section + "]");
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) fail("expected 'key = value'");
        if (section.empty()) fail("key outside of any section");
        const std::string key = config_detail::trim(s.substr(0, eq));
        const std::string value = config_detail::trim(s.substr(eq + 1));
        const auto* f = config_detail::find_field(section, key);
        if (!f) fail("unknown key '" + key + "' in [" + section + "]");
        if (!seen_keys.insert({section, key}).second) fail("duplicate key '" + key + "' in [" + section + "]");
        try {
            f->set(cfg, value);
        } catch (const ConfigError& e) {
            fail(section + "." + key + ": " + e.what());
        }
    }
    for (const auto& f : config_detail::schema()) {
        if (!seen_sections.count(f.section) && f.required)
            throw ConfigError(origin + ": missing section [" + f.section + "]");
        if (f.required && !seen_keys.count({f.section, f.key}))
            throw ConfigError(origin + ": missing required key '" + f.key + "' in [" + f.section + "]");
    }
    return cfg;
}

inline ScenarioConfig parse_config_string(const std::string& text, const std::string& origin = "config") {
    std::istringstream is(text);
    return parse_config(is, origin);
}

inline ScenarioConfig load_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config '" + path + "'");
    auto cfg = parse_config(f, path);
    // Relative data paths are resolved against the config's directory.
    const auto base = std::filesystem::path(path).parent_path();
    for (auto* p : {&cfg.load_csv, &cfg.schedule_csv})
        if (!p->empty() && std::filesystem::path(*p).is_relative()) *p = (base / *p).string();
    return cfg;
}

/// Writes every key explicitly, so the text fully determines the scenario.
inline void emit_config(std::ostream& os, const ScenarioConfig& cfg) {
    std::string section;
    for (const auto& f : config_detail::schema()) {
        if (section != f.section) {
            os << (section.empty() ? "" : "\n") << '[' << f.section << "]\n";
            section = f.section;
        }
        os << f.key << " = " << f.get(cfg) << '\n';
    }
}

inline std::string emit_config_string(const ScenarioConfig& cfg) {
    std::ostringstream os;
    emit_config(os, cfg);
    return os.str();
}

/// Text of every section except [controller] and [output]; two configs that agree here describe
/// the same experiment.
inline std::string experiment_signature(const ScenarioConfig& cfg) {
    std::ostringstream os;
    for (const auto& f : config_detail::schema()) {
        const std::string sec = f.section;
        if (sec == "controller" || sec == "output" || (sec == "simulation" && std::string(f.key) == "name")) continue;
        os << sec << '.' << f.key << '=' << f.get(cfg) << '\n';
    }
    return os.str();
}

[[nodiscard]] inline ControllerKind controller_kind_from_string(const std::string& s) {
    if (s == "fblc") return ControllerKind::Fblc;
    if (s == "smc") return ControllerKind::Smc;
    if (s == "constant-gain") return ControllerKind::ConstantGain;
    if (s == "brayton-moser") return ControllerKind::BraytonMoser;
    throw ConfigError("unknown controller '" + s + "'");
}

/// Builds and validates the scenario; precondition failures become ConfigError.
inline Scenario to_scenario(const ScenarioConfig& c) {
    Scenario sc;
    try {
        sc.name = c.name;
        sc.plant = {c.R, c.L, c.C};
        const auto kind = profile_kind_from_string(c.load_kind);
        if (!c.load_csv.empty()) {
            sc.load = LoadProfile::read_csv_file(c.load_csv, kind);
        } else if (kind == ProfileKind::Constant) {
            sc.load = LoadProfile::constant(c.power);
        } else {
            if (c.times.size() != c.powers.size() || c.times.empty())
                throw ConfigError("[load] times and powers must be nonempty lists of equal length");
            sc.load = LoadProfile::piecewise(kind, c.times, c.powers);
        }
        if (kind != ProfileKind::Constant) sc.load.set_horizon(c.horizon.value_or(std::max(sc.load.times().back(), c.t_end)));
        sc.matched = LoadProfile::constant(c.matched_power);

        auto& k = sc.controller;
        k.kind = controller_kind_from_string(c.controller);
        k.v_ref = c.v_ref;
        k.reference = c.reference == "interaction" ? ReferenceMode::Interaction : ReferenceMode::Regulation;
        const auto sampling = c.sampling == "stage" ? Sampling::Stage : Sampling::Step;
        k.fblc = {c.fblc_K, c.fblc_eta_error, sampling};
        k.smc.K = c.smc_K;
        k.smc.boundary_layer = c.smc_boundary_layer;
        k.smc.equivalent_control = c.smc_equivalent_control;
        k.smc.eta_error = c.smc_eta_error;
        k.smc.sampling = sampling;
        k.smc_auto_bound = !c.smc_L_bar.has_value();
        k.smc.L_bar = c.smc_L_bar.value_or(0.0);
        k.smc_bound_safety = c.smc_safety;
        k.constant_gain = {c.cg_K1, c.cg_K2, c.cg_u_ref.value_or(0.0), c.v_ref};
        k.constant_gain_auto_u_ref = !c.cg_u_ref.has_value();
        k.brayton_moser = {c.bm_K1, c.bm_K2, c.bm_K3, c.bm_Pi};
        k.model = {c.R * (1.0 + c.R_error), c.L * (1.0 + c.L_error), c.C * (1.0 + c.C_error)};

        sc.t_end = c.t_end;
        sc.dt = c.dt;
        sc.decimation = c.decimation;
        if (c.tail_steps < 0) throw ConfigError("[simulation] tail_steps must be >= 0");
        sc.tail_steps = static_cast<std::size_t>(c.tail_steps);
        sc.i0 = c.i0;
        sc.v0 = c.v0;
        sc.u0 = c.u0.value_or(std::numeric_limits<double>::quiet_NaN());
        sc.presettle = c.presettle;
        sc.feasibility.window = c.window;
        sc.feasibility.tau_prime = c.tau_prime.value_or(std::numeric_limits<double>::quiet_NaN());
        sc.feasibility.schedule_csv = c.schedule_csv;
        if (c.tau_prime && !(*c.tau_prime > 0.0)) throw ConfigError("[feasibility] tau_prime must be positive");
        if (!(c.smc_safety >= 1.0)) throw ConfigError("[controller] smc_safety must be >= 1");
        sc.validate();
    } catch (const ContractViolation& e) {
        throw ConfigError(std::string("invalid scenario: ") + e.what());
    }
    return sc;
}

}  // namespace enspace
