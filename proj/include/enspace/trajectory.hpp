#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <ostream>
#include <string>
#include <vector>

#include "enspace/energy_space.hpp"

namespace enspace {

/// One recorded instant of the source/load interconnection.
/// Index 1 is the RLC source, index 2 the load; "out"/"in" follow the junction convention
/// z1_in = -z2_out and z2_in = -z1_out.
struct Sample {
    double t = 0.0;
    double i = 0.0, v = 0.0, u = 0.0;
    double di = 0.0, dv = 0.0, du = 0.0;
    double y_z = 0.0, y_ref = 0.0, y_ref_rate = 0.0, u_z = 0.0, sigma = 0.0;
    double E = 0.0, p = 0.0, p_dot = 0.0, E_t = 0.0, tau = 0.0, D = 0.0;
    double eta = 0.0, eta_hat = 0.0, eta_tilde = 0.0;
    double P_l = 0.0, P_l_rate = 0.0, P_mm = 0.0;
    InteractionRate control, matched;
    double Qd_cap = 0.0;
    InteractionRate out1, in1, out2, in2;
};

struct Column {
    const char* name;
    double (*get)(const Sample&);
};

// Fixed CSV column order.
inline const std::array<Column, 37>& sample_columns() {
    static const std::array<Column, 37> cols{{
        {"t", [](const Sample& s) { return s.t; }},
        {"i", [](const Sample& s) { return s.i; }},
        {"v", [](const Sample& s) { return s.v; }},
        {"u", [](const Sample& s) { return s.u; }},
        {"di_dt", [](const Sample& s) { return s.di; }},
        {"dv_dt", [](const Sample& s) { return s.dv; }},
        {"du_dt", [](const Sample& s) { return s.du; }},
        {"y_z", [](const Sample& s) { return s.y_z; }},
        {"y_ref", [](const Sample& s) { return s.y_ref; }},
        {"y_ref_rate", [](const Sample& s) { return s.y_ref_rate; }},
        {"u_z", [](const Sample& s) { return s.u_z; }},
        {"sigma", [](const Sample& s) { return s.sigma; }},
        {"E", [](const Sample& s) { return s.E; }},
        {"p", [](const Sample& s) { return s.p; }},
        {"p_dot", [](const Sample& s) { return s.p_dot; }},
        {"E_t", [](const Sample& s) { return s.E_t; }},
        {"tau", [](const Sample& s) { return s.tau; }},
        {"D", [](const Sample& s) { return s.D; }},
        {"eta", [](const Sample& s) { return s.eta; }},
        {"eta_hat", [](const Sample& s) { return s.eta_hat; }},
        {"eta_tilde", [](const Sample& s) { return s.eta_tilde; }},
        {"P_l", [](const Sample& s) { return s.P_l; }},
        {"P_l_rate", [](const Sample& s) { return s.P_l_rate; }},
        {"P_mm", [](const Sample& s) { return s.P_mm; }},
        {"P_u", [](const Sample& s) { return s.control.P; }},
        {"Qd_u", [](const Sample& s) { return s.control.Qd; }},
        {"P_m", [](const Sample& s) { return s.matched.P; }},
        {"Qd_m", [](const Sample& s) { return s.matched.Qd; }},
        {"Qd_cap", [](const Sample& s) { return s.Qd_cap; }},
        {"P1_out", [](const Sample& s) { return s.out1.P; }},
        {"Qd1_out", [](const Sample& s) { return s.out1.Qd; }},
        {"P1_in", [](const Sample& s) { return s.in1.P; }},
        {"Qd1_in", [](const Sample& s) { return s.in1.Qd; }},
        {"P2_out", [](const Sample& s) { return s.out2.P; }},
        {"Qd2_out", [](const Sample& s) { return s.out2.Qd; }},
        {"P2_in", [](const Sample& s) { return s.in2.P; }},
        {"Qd2_in", [](const Sample& s) { return s.in2.Qd; }},
    }};
    return cols;
}

/// Whole-run extrema taken at every integration step, not only on the recording grid.
struct RunStats {
    std::size_t steps = 0;
    double max_abs_du = 0.0;
    double t_max_abs_du = 0.0;
    double sup_eta_residual = 0.0;  ///< sup |eta_tilde - 4 E_t|
    double sup_eta_minus_4Et = 0.0;  ///< sup |eta - 4 E_t|
    double max_junction_P = 0.0;     ///< sup |P1_out + P2_out|
    double max_junction_Qd = 0.0;    ///< sup |Qd1_out + Qd2_out|
    double peak_P = 0.0;             ///< sup max(|P1_out|, |P2_out|)
    double peak_Qd = 0.0;
};

struct Trajectory {
    std::vector<Sample> samples;  ///< decimated, uniform grid
    double record_dt = 0.0;
    std::vector<Sample> tail;  ///< last steps at full rate
    double dt = 0.0;
    RunStats stats;

    [[nodiscard]] bool empty() const { return samples.empty(); }
    [[nodiscard]] std::size_t size() const { return samples.size(); }
};

inline void write_samples_csv(std::ostream& os, const std::vector<Sample>& samples) {
    const auto& cols = sample_columns();
    for (std::size_t c = 0; c < cols.size(); ++c) os << (c ? "," : "") << cols[c].name;
    os << '\n';
    os.precision(12);
    for (const auto& s : samples) {
        for (std::size_t c = 0; c < cols.size(); ++c) os << (c ? "," : "") << cols[c].get(s);
        os << '\n';
    }
}

}  // namespace enspace
