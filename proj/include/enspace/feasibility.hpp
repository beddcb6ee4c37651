#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "enspace/components.hpp"
#include "enspace/energy_space.hpp"
#include "enspace/errors.hpp"
#include "enspace/trajectory.hpp"

namespace enspace {

struct IntervalBox {
    double P_lo = 0.0, P_hi = 0.0;
    double Qd_lo = 0.0, Qd_hi = 0.0;

    void validate() const {
        if (!(P_lo <= P_hi) || !(Qd_lo <= Qd_hi)) throw ContractViolation("interval box needs lo <= hi on both axes");
    }
    [[nodiscard]] bool contains(const InteractionRate& r) const {
        return r.P >= P_lo && r.P <= P_hi && r.Qd >= Qd_lo && r.Qd <= Qd_hi;
    }
    friend bool operator==(const IntervalBox&, const IntervalBox&) = default;
};

/// One box per window [t_start + k T_s, t_start + (k+1) T_s).
struct RangeSchedule {
    double window = 1.0;
    double t_start = 0.0;
    std::vector<IntervalBox> boxes;

    [[nodiscard]] std::optional<std::size_t> window_of(double t) const {
        if (boxes.empty() || t < t_start) return std::nullopt;
        auto k = static_cast<std::size_t>(std::floor((t - t_start) / window + 1e-9));
        if (k >= boxes.size()) {
            // The closing instant of the horizon belongs to the last window.
            if (t <= t_start + window * static_cast<double>(boxes.size()) + 1e-9) return boxes.size() - 1;
            return std::nullopt;
        }
        return k;
    }
};

enum class Axis { P, Qd, Both };

[[nodiscard]] inline const char* to_string(Axis a) {
    switch (a) {
        case Axis::P: return "P";
        case Axis::Qd: return "Qd";
        case Axis::Both: return "both";
    }
    return "?";
}

// =============================================================================
// Ranges
// =============================================================================

/// Incoming range seen by a source feeding a constant-power load whose power stays in
/// [P_min, P_max] with rate in [Pd_min, Pd_max]:
///   P_in  in [-P_max, -P_min]
///   Qd_in in [-Pd_max, -Pd_min] + (2/tau') [-P_max, P_max]
/// The second term bounds 2 (P/v) dv/dt for voltage rates up to |dv/dt| <= v / tau'.
[[nodiscard]] inline IntervalBox incoming_range_from_load(double P_min, double P_max, double Pd_min, double Pd_max,
                                                          double tau_prime) {
    if (!(P_min <= P_max) || !(Pd_min <= Pd_max)) throw ContractViolation("load range needs min <= max");
    if (!(tau_prime > 0.0)) throw ContractViolation("tau' must be positive");
    const double reach = 2.0 / tau_prime * std::max(std::abs(P_min), std::abs(P_max));
    return {-P_max, -P_min, -Pd_max - reach, -Pd_min + reach};
}

/// tau' = min(10 L / R, 1 / K)
[[nodiscard]] inline double tau_prime(const RlcParams& p, double K) {
    if (!(K > 0.0)) throw ContractViolation("tau': controller gain must be positive");
    return std::min(10.0 * p.L / p.R, 1.0 / K);
}

/// Incoming boxes from exact per-window extrema of the load profile.
[[nodiscard]] inline RangeSchedule schedule_from_profile(const LoadProfile& load, double window, double horizon,
                                                         double tau_p) {
    if (!(window > 0.0)) throw ContractViolation("window must be positive");
    RangeSchedule s;
    s.window = window;
    const auto n = static_cast<std::size_t>(std::ceil(horizon / window - 1e-9));
    for (std::size_t k = 0; k < n; ++k) {
        const double a = window * static_cast<double>(k);
        const double b = std::min(horizon, a + window);
        double Pmin, Pmax, Pdmin, Pdmax;
        load.range_over(a, b, Pmin, Pmax, Pdmin, Pdmax);
        s.boxes.push_back(incoming_range_from_load(Pmin, Pmax, Pdmin, Pdmax, tau_p));
    }
    return s;
}

// =============================================================================
// Containment
// =============================================================================

/// Slack granted to containment tests: roundoff on values of size ~|bound|.
[[nodiscard]] inline double containment_tolerance(double lo, double hi) {
    return 1e-9 * std::max({std::abs(lo), std::abs(hi), 1.0});
}

struct Containment {
    bool feasible = true;
    Axis axis = Axis::Both;  ///< violating axis when infeasible
    double margin = 0.0;     ///< smallest slack (negative = violation), in the axis' units
};

/// outgoing subset of incoming, non-strict, per axis.
[[nodiscard]] inline Containment check_containment(const IntervalBox& out, const IntervalBox& in) {
    out.validate();
    in.validate();
    const double mP = std::min(out.P_lo - in.P_lo, in.P_hi - out.P_hi);
    const double mQ = std::min(out.Qd_lo - in.Qd_lo, in.Qd_hi - out.Qd_hi);
    Containment c;
    c.feasible = mP >= -containment_tolerance(in.P_lo, in.P_hi) && mQ >= -containment_tolerance(in.Qd_lo, in.Qd_hi);
    if (!c.feasible) {
        const bool bad_P = mP < -containment_tolerance(in.P_lo, in.P_hi);
        const bool bad_Q = mQ < -containment_tolerance(in.Qd_lo, in.Qd_hi);
        c.axis = bad_P && bad_Q ? Axis::Both : (bad_P ? Axis::P : Axis::Qd);
        c.margin = c.axis == Axis::Both ? std::min(mP, mQ) : (bad_P ? mP : mQ);
    } else {
        c.margin = std::min(mP, mQ);
    }
    return c;
}

struct Violation {
    double t = 0.0;
    std::size_t window = 0;
    Axis axis = Axis::Qd;
    double value = 0.0;   ///< offending outgoing value on that axis
    double excess = 0.0;  ///< distance outside the box
};

/// Earliest recorded sample whose outgoing source rate leaves its window's incoming box.
[[nodiscard]] inline std::optional<Violation> detect_violation(const std::vector<Sample>& traj,
                                                               const RangeSchedule& sched, Axis which) {
    if (sched.boxes.empty()) return std::nullopt;
    for (const auto& s : traj) {
        auto k = sched.window_of(s.t);
        if (!k) continue;
        const auto& b = sched.boxes[*k];
        const auto& z = s.out1;
        auto outside = [](double x, double lo, double hi) { return x < lo ? lo - x : (x > hi ? x - hi : 0.0); };
        if (which != Axis::P) {
            const double ex = outside(z.Qd, b.Qd_lo, b.Qd_hi);
            if (ex > containment_tolerance(b.Qd_lo, b.Qd_hi)) return Violation{s.t, *k, Axis::Qd, z.Qd, ex};
        }
        if (which != Axis::Qd) {
            const double ex = outside(z.P, b.P_lo, b.P_hi);
            if (ex > containment_tolerance(b.P_lo, b.P_hi)) return Violation{s.t, *k, Axis::P, z.P, ex};
        }
    }
    return std::nullopt;
}

/// Smallest slack of any recorded outgoing rate inside its window's box (negative = outside),
/// with the time it occurs. Each axis' slack is scaled by the box's half-width so the two axes compare.
struct PointwiseMargin {
    double margin = std::numeric_limits<double>::infinity();
    double t = std::numeric_limits<double>::quiet_NaN();
};

[[nodiscard]] inline PointwiseMargin pointwise_margin(const std::vector<Sample>& traj, const RangeSchedule& sched) {
    PointwiseMargin m;
    for (const auto& s : traj) {
        auto k = sched.window_of(s.t);
        if (!k) continue;
        const auto& b = sched.boxes[*k];
        auto slack = [](double x, double lo, double hi) {
            const double half = std::max(0.5 * (hi - lo), 1.0);
            return std::min(x - lo, hi - x) / half;
        };
        const double v = std::min(slack(s.out1.P, b.P_lo, b.P_hi), slack(s.out1.Qd, b.Qd_lo, b.Qd_hi));
        if (v < m.margin) {
            m.margin = v;
            m.t = s.t;
        }
    }
    return m;
}

/// Box spanned by the recorded outgoing source rate inside window k.
[[nodiscard]] inline std::optional<IntervalBox> outgoing_box(const std::vector<Sample>& traj,
                                                             const RangeSchedule& sched, std::size_t k) {
    IntervalBox b{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
                  std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    bool any = false;
    for (const auto& s : traj) {
        auto w = sched.window_of(s.t);
        if (!w || *w != k) continue;
        any = true;
        b.P_lo = std::min(b.P_lo, s.out1.P);
        b.P_hi = std::max(b.P_hi, s.out1.P);
        b.Qd_lo = std::min(b.Qd_lo, s.out1.Qd);
        b.Qd_hi = std::max(b.Qd_hi, s.out1.Qd);
    }
    if (!any) return std::nullopt;
    return b;
}

struct WindowVerdict {
    std::size_t k = 0;
    double t_start = 0.0;
    IntervalBox incoming;
    std::optional<IntervalBox> outgoing;
    Containment containment;
};

/// Set-level (per-window box) verdicts.
[[nodiscard]] inline std::vector<WindowVerdict> window_verdicts(const std::vector<Sample>& traj,
                                                                const RangeSchedule& sched) {
    std::vector<WindowVerdict> out;
    for (std::size_t k = 0; k < sched.boxes.size(); ++k) {
        WindowVerdict w;
        w.k = k;
        w.t_start = sched.t_start + sched.window * static_cast<double>(k);
        w.incoming = sched.boxes[k];
        w.outgoing = outgoing_box(traj, sched, k);
        if (w.outgoing) w.containment = check_containment(*w.outgoing, w.incoming);
        out.push_back(w);
    }
    return out;
}

// =============================================================================
// CSV
// =============================================================================

inline void write_schedule_csv(std::ostream& os, const RangeSchedule& s) {
    os << "k,t_start,P_lo,P_hi,Qd_lo,Qd_hi\n";
    os.precision(17);
    for (std::size_t k = 0; k < s.boxes.size(); ++k) {
        const auto& b = s.boxes[k];
        os << k << ',' << s.t_start + s.window * static_cast<double>(k) << ',' << b.P_lo << ',' << b.P_hi << ','
           << b.Qd_lo << ',' << b.Qd_hi << '\n';
    }
}

[[nodiscard]] inline RangeSchedule read_schedule_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw ConfigError("schedule CSV: empty");
    line.erase(std::remove_if(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); }), line.end());
    if (line != "k,t_start,P_lo,P_hi,Qd_lo,Qd_hi") throw ConfigError("schedule CSV: unexpected header");
    RangeSchedule s;
    std::vector<double> starts;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> v;
        while (std::getline(ss, cell, ',')) {
            try {
                v.push_back(std::stod(cell));
            } catch (const std::logic_error&) {
                throw ConfigError("schedule CSV line " + std::to_string(lineno) + ": not a number");
            }
        }
        if (v.size() != 6) throw ConfigError("schedule CSV line " + std::to_string(lineno) + ": expected 6 columns");
        if (static_cast<std::size_t>(v[0]) != s.boxes.size())
            throw ConfigError("schedule CSV line " + std::to_string(lineno) + ": windows must be numbered 0, 1, ...");
        IntervalBox b{v[2], v[3], v[4], v[5]};
        try {
            b.validate();
        } catch (const ContractViolation& e) {
            throw ConfigError("schedule CSV line " + std::to_string(lineno) + ": " + e.what());
        }
        starts.push_back(v[1]);
        s.boxes.push_back(b);
    }
    if (s.boxes.empty()) return s;
    s.t_start = starts.front();
    if (starts.size() > 1) s.window = starts[1] - starts[0];
    for (std::size_t k = 1; k < starts.size(); ++k)
        if (std::abs(starts[k] - (s.t_start + s.window * static_cast<double>(k))) > 1e-9 * std::max(1.0, s.window))
            throw ConfigError("schedule CSV: windows must be contiguous and of equal length");
    return s;
}

}  // namespace enspace
