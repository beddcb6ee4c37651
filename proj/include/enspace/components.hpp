#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "enspace/energy_space.hpp"
#include "enspace/errors.hpp"

namespace enspace {

// =============================================================================
// RLC source
// =============================================================================

struct RlcParams {
    double R = 0.01;
    double L = 1.12e-3;
    double C = 6.8e-3;

    void validate() const {
        if (!(R > 0.0) || !(L > 0.0) || !(C > 0.0) || !std::isfinite(R + L + C))
            throw ContractViolation("RLC parameters must be finite and strictly positive");
    }

    /// H = diag(L, C), B = diag(R, 0) over x = (i, v).
    [[nodiscard]] QuadraticEnergyModel energy_model() const {
        Eigen::MatrixXd H = Eigen::Vector2d(L, C).asDiagonal();
        Eigen::MatrixXd B = Eigen::Vector2d(R, 0.0).asDiagonal();
        return {H, B};
    }

    friend bool operator==(const RlcParams&, const RlcParams&) = default;
};

/// Inductor current, capacitor voltage and the (dynamic) source voltage.
struct RlcState {
    double i = 1.0;
    double v = 80.0;
    double u = 80.01;
};

struct RlcDerivative {
    double di = 0.0;
    double dv = 0.0;
};

/// di/dt = (-R i - v + u + P_mm / i) / L,  dv/dt = (i + P_mu / v) / C.
///
/// P_mm is the matched disturbance (injected at the inductor), P_mu the unmatched one
/// (for a constant-power load P_mu = -P_l).
[[nodiscard]] inline RlcDerivative rlc_state_derivative(const RlcState& s, const RlcParams& p, double P_mm,
                                                        double P_mu) {
    double mm = 0.0, mu = 0.0;
    if (P_mm != 0.0) {
        if (std::abs(s.i) <= kEpsDiv) throw DegenerateState("matched disturbance with i ~ 0");
        mm = P_mm / s.i;
    }
    if (P_mu != 0.0) {
        if (std::abs(s.v) <= kEpsDiv) throw DegenerateState("unmatched disturbance with v ~ 0");
        mu = P_mu / s.v;
    }
    return {(-p.R * s.i - s.v + s.u + mm) / p.L, (s.i + mu) / p.C};
}

/// y_z = R i^2 - u i - P_mm
[[nodiscard]] inline double rlc_energy_output(const RlcState& s, const RlcParams& p, double P_mm) {
    return energy_output(p.R * s.i * s.i, s.u * s.i, P_mm);
}

/// E_t = 1/2 (L di^2 + C dv^2)
[[nodiscard]] inline double rlc_tangent_energy(const RlcDerivative& ds, const RlcParams& p) {
    return 0.5 * (p.L * ds.di * ds.di + p.C * ds.dv * ds.dv);
}

/// Capacitor reactive power rate, with capacitor current i_c = i - i2.
[[nodiscard]] inline double rlc_capacitor_reactive_rate(const RlcState& s, const RlcDerivative& ds, double i2,
                                                        double di2) {
    return s.v * (ds.di - di2) - (s.i - i2) * ds.dv;
}

/// Lumped nonlinearity in the closed form printed for the RLC source:
///   eta_1 = 4 E_t + 2 [v (di - di2) - (i - i2) dv] + (2 R i di - 2 u di + 4 E_t).
///
/// This equals rlc_normal_form_eta + 4 E_t + 2 Qd_c. It is kept for reference and diagnostics;
/// the controllers cancel the normal-form term.
[[nodiscard]] inline double rlc_eta(const RlcState& s, const RlcParams& p, const RlcDerivative& ds, double i2,
                                    double di2) {
    const double four_Et = 4.0 * rlc_tangent_energy(ds, p);
    const double qc = rlc_capacitor_reactive_rate(s, ds, i2, di2);
    const double last = 2.0 * p.R * s.i * ds.di - 2.0 * s.u * ds.di + four_Et;
    return four_Et + 2.0 * qc + last;
}

/// eta such that dy_z/dt = -4 E_t + eta + Qd_u holds exactly:
///   eta = 2 R i di + 4 E_t - 2 u di - dP_mm/dt.
[[nodiscard]] inline double rlc_normal_form_eta(const RlcState& s, const RlcParams& p, const RlcDerivative& ds,
                                                double P_mm_rate) {
    return normal_form_eta(2.0 * p.R * s.i * ds.di, rlc_tangent_energy(ds, p), s.u, ds.di, P_mm_rate);
}

// =============================================================================
// Constant-power load
// =============================================================================

[[nodiscard]] inline double cpl_current(double P_l, double v) {
    if (std::abs(v) <= kEpsDiv) throw DegenerateState("constant-power load with v ~ 0");
    return P_l / v;
}

/// di2/dt = Pdot/v - P dv / v^2
[[nodiscard]] inline double cpl_current_rate(double P_l, double P_l_rate, double v, double dv) {
    if (std::abs(v) <= kEpsDiv) throw DegenerateState("constant-power load with v ~ 0");
    return P_l_rate / v - P_l * dv / (v * v);
}

/// Incoming rate seen by the source: (-P_l, -Pdot_l + 2 (P_l / v) dv).
[[nodiscard]] inline InteractionRate cpl_incoming_rate(double P_l, double P_l_rate, double v, double dv) {
    if (std::abs(v) <= kEpsDiv) throw DegenerateState("constant-power load with v ~ 0");
    return {-P_l, -P_l_rate + 2.0 * (P_l / v) * dv};
}

// =============================================================================
// Load profiles
// =============================================================================

enum class ProfileKind { Constant, PiecewiseLinear, PiecewiseConstant };

[[nodiscard]] inline const char* to_string(ProfileKind k) {
    switch (k) {
        case ProfileKind::Constant: return "constant";
        case ProfileKind::PiecewiseLinear: return "piecewise-linear";
        case ProfileKind::PiecewiseConstant: return "piecewise-constant";
    }
    return "?";
}

[[nodiscard]] inline ProfileKind profile_kind_from_string(const std::string& s) {
    if (s == "constant") return ProfileKind::Constant;
    if (s == "piecewise-linear") return ProfileKind::PiecewiseLinear;
    if (s == "piecewise-constant") return ProfileKind::PiecewiseConstant;
    throw ConfigError("unknown profile kind '" + s + "'");
}

struct ProfileValue {
    double P = 0.0;
    double P_rate = 0.0;
};

/// Time-stamped power samples. Piecewise-constant profiles hold P_k on [t_k, t_k+1) and treat
/// each t_k as a step event (zero rate on both sides). The horizon defaults to the last sample
/// time (infinite for constant profiles).
class LoadProfile {
public:
    LoadProfile() : LoadProfile(constant(1200.0)) {}

    static LoadProfile constant(double P, double horizon = std::numeric_limits<double>::infinity()) {
        LoadProfile lp(ProfileKind::Constant, {0.0}, {P}, horizon);
        return lp;
    }

    static LoadProfile piecewise(ProfileKind kind, std::vector<double> t, std::vector<double> P,
                                 double horizon = std::numeric_limits<double>::quiet_NaN()) {
        if (std::isnan(horizon)) horizon = t.empty() ? 0.0 : t.back();
        return LoadProfile(kind, std::move(t), std::move(P), horizon);
    }

    [[nodiscard]] ProfileKind kind() const { return kind_; }
    [[nodiscard]] const std::vector<double>& times() const { return t_; }
    [[nodiscard]] const std::vector<double>& values() const { return P_; }
    [[nodiscard]] double horizon() const { return horizon_; }
    void set_horizon(double h) {
        if (!(h >= t_.back())) throw ContractViolation("profile horizon must not precede the last sample");
        horizon_ = h;
    }

    /// Index of the piece containing t (right-continuous).
    [[nodiscard]] std::size_t piece_at(double t) const {
        check_horizon(t);
        auto it = std::upper_bound(t_.begin(), t_.end(), t);
        if (it == t_.begin()) return 0;
        return static_cast<std::size_t>(it - t_.begin()) - 1;
    }

    /// Evaluates piece k's formula at t (linear pieces extrapolate inside a split step).
    [[nodiscard]] ProfileValue eval_piece(std::size_t k, double t) const {
        switch (kind_) {
            case ProfileKind::Constant: return {P_[0], 0.0};
            case ProfileKind::PiecewiseConstant: return {P_[k], 0.0};
            case ProfileKind::PiecewiseLinear: {
                if (k + 1 >= t_.size()) return {P_.back(), 0.0};  // hold after the last sample
                const double slope = (P_[k + 1] - P_[k]) / (t_[k + 1] - t_[k]);
                return {P_[k] + slope * (t - t_[k]), slope};
            }
        }
        return {};
    }

    [[nodiscard]] ProfileValue eval(double t) const { return eval_piece(piece_at(t), t); }

    /// Breakpoints strictly inside (a, b].
    [[nodiscard]] std::vector<double> breakpoints_in(double a, double b) const {
        std::vector<double> out;
        if (kind_ == ProfileKind::Constant) return out;
        for (double tk : t_)
            if (tk > a && tk <= b) out.push_back(tk);
        return out;
    }

    /// Exact extrema of P and Pdot over [a, b] (steps contribute no rate).
    void range_over(double a, double b, double& P_min, double& P_max, double& Pd_min, double& Pd_max) const {
        b = std::min(b, horizon_);
        std::vector<double> probe{a};
        for (double tk : breakpoints_in(a, b))
            if (tk < b) probe.push_back(tk);
        probe.push_back(b);
        P_min = Pd_min = std::numeric_limits<double>::infinity();
        P_max = Pd_max = -std::numeric_limits<double>::infinity();
        auto take = [&](double P) {
            P_min = std::min(P_min, P);
            P_max = std::max(P_max, P);
        };
        for (std::size_t j = 0; j < probe.size(); ++j) {
            const std::size_t k = piece_at(probe[j]);
            take(eval_piece(k, probe[j]).P);
            if (j > 0 && k > 0 && t_[k] == probe[j]) take(eval_piece(k - 1, probe[j]).P);
        }
        for (std::size_t j = 0; j + 1 < probe.size(); ++j) {
            if (!(probe[j + 1] > probe[j])) continue;
            const double r = eval(0.5 * (probe[j] + probe[j + 1])).P_rate;
            Pd_min = std::min(Pd_min, r);
            Pd_max = std::max(Pd_max, r);
        }
        if (!std::isfinite(Pd_min)) Pd_min = Pd_max = eval(a).P_rate;
    }

    /// Loads must draw strictly positive power.
    void validate_load() const {
        for (double P : P_)
            if (!(P > 0.0)) throw ContractViolation("load profile: power must be strictly positive");
    }

    void write_csv(std::ostream& os) const {
        os << "t_seconds,power_watts\n";
        os.precision(17);
        for (std::size_t k = 0; k < t_.size(); ++k) os << t_[k] << ',' << P_[k] << '\n';
    }

    static LoadProfile read_csv(std::istream& is, ProfileKind kind) {
        std::string line;
        if (!std::getline(is, line)) throw ConfigError("load CSV: empty file");
        auto strip = [](std::string s) {
            s.erase(std::remove_if(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); }), s.end());
            return s;
        };
        if (strip(line) != "t_seconds,power_watts")
            throw ConfigError("load CSV: header must be 't_seconds,power_watts'");
        std::vector<double> t, P;
        std::size_t lineno = 1;
        while (std::getline(is, line)) {
            ++lineno;
            line = strip(line);
            if (line.empty()) continue;
            auto comma = line.find(',');
            if (comma == std::string::npos) throw ConfigError("load CSV line " + std::to_string(lineno) + ": expected 2 columns");
            try {
                std::size_t used = 0;
                double tv = std::stod(line.substr(0, comma), &used);
                double pv = std::stod(line.substr(comma + 1), &used);
                t.push_back(tv);
                P.push_back(pv);
            } catch (const std::logic_error&) {
                throw ConfigError("load CSV line " + std::to_string(lineno) + ": not a number");
            }
        }
        if (t.empty()) throw ConfigError("load CSV: no samples");
        if (kind == ProfileKind::Constant && t.size() != 1) throw ConfigError("load CSV: constant profile needs one sample");
        return piecewise(kind, std::move(t), std::move(P));
    }

    static LoadProfile read_csv_file(const std::string& path, ProfileKind kind) {
        std::ifstream f(path);
        if (!f) throw ConfigError("cannot open load CSV '" + path + "'");
        return read_csv(f, kind);
    }

    friend bool operator==(const LoadProfile&, const LoadProfile&) = default;

private:
    LoadProfile(ProfileKind kind, std::vector<double> t, std::vector<double> P, double horizon)
        : kind_(kind), t_(std::move(t)), P_(std::move(P)), horizon_(horizon) {
        if (t_.empty() || t_.size() != P_.size()) throw ContractViolation("load profile: need matching, nonempty samples");
        for (std::size_t k = 0; k < t_.size(); ++k) {
            if (!std::isfinite(t_[k]) || !std::isfinite(P_[k])) throw ContractViolation("load profile: non-finite sample");
            if (k > 0 && !(t_[k] > t_[k - 1])) throw ContractViolation("load profile: times must be strictly increasing");
        }
        if (!(horizon_ >= t_.back())) throw ContractViolation("load profile: horizon before last sample");
    }

    void check_horizon(double t) const {
        if (t < t_.front() - 1e-12 || t > horizon_ + 1e-12)
            throw OutOfHorizon("load profile evaluated at t=" + std::to_string(t) + " outside its horizon");
    }

    ProfileKind kind_;
    std::vector<double> t_;
    std::vector<double> P_;
    double horizon_;
};

/// (P_l, Pdot_l) at t.
[[nodiscard]] inline ProfileValue load_profile_eval(const LoadProfile& lp, double t) { return lp.eval(t); }

}  // namespace enspace
