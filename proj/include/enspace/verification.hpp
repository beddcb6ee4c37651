#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "enspace/errors.hpp"
#include "enspace/trajectory.hpp"

namespace enspace {

// A FAIL on any certificate means "certificate not established", never "unstable":
// every theorem checked here is a sufficient condition only.

enum class Verdict { Pass, Fail, NotApplicable };

[[nodiscard]] inline const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::Pass: return "PASS";
        case Verdict::Fail: return "FAIL";
        case Verdict::NotApplicable: return "N/A";
    }
    return "?";
}

struct AuditResult {
    std::string check;
    Verdict verdict = Verdict::NotApplicable;
    std::string inequality;  ///< the inequality actually evaluated
    double worst_margin = std::numeric_limits<double>::infinity();  ///< min over evaluated samples of rhs - lhs
    double t_worst = std::numeric_limits<double>::quiet_NaN();
    double t_first_fail = std::numeric_limits<double>::quiet_NaN();
    double tolerance = 0.0;
    std::size_t evaluated = 0;
    std::size_t skipped = 0;   ///< hypothesis of the certificate not met
    std::size_t boundary = 0;  ///< samples the discrete check cannot resolve
    std::string note;
};

struct AuditReport {
    std::vector<AuditResult> results;

    [[nodiscard]] const AuditResult* find(const std::string& check) const {
        for (const auto& r : results)
            if (r.check == check) return &r;
        return nullptr;
    }
};

inline void write_audit_csv(std::ostream& os, const AuditReport& rep) {
    os << "check,verdict,worst_margin,t_worst\n";
    os.precision(12);
    for (const auto& r : rep.results) os << r.check << ',' << to_string(r.verdict) << ',' << r.worst_margin << ',' << r.t_worst << '\n';
}

namespace detail {

/// Central difference at interior points, one-sided at the ends.
inline std::vector<double> derivative(std::span<const double> t, std::span<const double> x) {
    const std::size_t n = x.size();
    std::vector<double> d(n, 0.0);
    if (n < 2) return d;
    d[0] = (x[1] - x[0]) / (t[1] - t[0]);
    d[n - 1] = (x[n - 1] - x[n - 2]) / (t[n - 1] - t[n - 2]);
    for (std::size_t k = 1; k + 1 < n; ++k) d[k] = (x[k + 1] - x[k - 1]) / (t[k + 1] - t[k - 1]);
    return d;
}

inline std::vector<double> cumulative_trapezoid(std::span<const double> t, std::span<const double> x) {
    std::vector<double> out(x.size(), 0.0);
    for (std::size_t k = 1; k < x.size(); ++k) out[k] = out[k - 1] + 0.5 * (t[k] - t[k - 1]) * (x[k] + x[k - 1]);
    return out;
}

template <class F>
std::vector<double> column(const std::vector<Sample>& s, F f) {
    std::vector<double> out;
    out.reserve(s.size());
    for (const auto& x : s) out.push_back(f(x));
    return out;
}

/// Samples whose central-difference stencil touches a jump of the load rate: the supply is
/// discontinuous there, and the closed loop answers with a transient faster than the record.
inline std::vector<char> load_kinks(const std::vector<Sample>& s) {
    std::vector<char> k(s.size(), 0);
    const std::size_t n = s.size();
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t a = j >= 2 ? j - 2 : 0, b = std::min(n - 1, j + 2);
        for (std::size_t m = a; m < b && !k[j]; ++m) k[j] = s[m].P_l_rate != s[m + 1].P_l_rate;
    }
    return k;
}

}  // namespace detail

// =============================================================================
// Storage / supply
// =============================================================================

/// Per-sample role in a storage/supply audit.
inline constexpr char kSkip = 0;      ///< the certificate's hypothesis does not hold
inline constexpr char kEvaluate = 1;
inline constexpr char kBoundary = 2;  ///< not resolvable on the recorded grid

/// dS/dt <= s + tol at every interior sample whose mask is kEvaluate (an empty mask evaluates all),
/// dS/dt by central differences. tol = tol_rel * max |s| over the evaluated samples.
[[nodiscard]] inline AuditResult audit_storage_supply(std::span<const double> t, std::span<const double> S,
                                                      std::span<const double> supply, std::span<const char> mask,
                                                      std::string check, std::string inequality,
                                                      double tol_rel = 1e-3) {
    if (t.size() != S.size() || t.size() != supply.size() || (!mask.empty() && mask.size() != t.size()))
        throw ContractViolation("audit_storage_supply: series lengths differ");
    AuditResult r;
    r.check = std::move(check);
    r.inequality = std::move(inequality);
    if (t.size() < 3) return r;
    const auto dS = detail::derivative(t, S);
    double scale = 0.0;
    for (std::size_t k = 1; k + 1 < t.size(); ++k)
        if (mask.empty() || mask[k] == kEvaluate) scale = std::max(scale, std::abs(supply[k]));
    r.tolerance = tol_rel * scale;
    for (std::size_t k = 1; k + 1 < t.size(); ++k) {
        if (!mask.empty() && mask[k] == kSkip) {
            ++r.skipped;
            continue;
        }
        if (!mask.empty() && mask[k] == kBoundary) {
            ++r.boundary;
            continue;
        }
        ++r.evaluated;
        const double m = supply[k] - dS[k];
        if (m < r.worst_margin) {
            r.worst_margin = m;
            r.t_worst = t[k];
        }
        if (m < -r.tolerance && std::isnan(r.t_first_fail)) r.t_first_fail = t[k];
    }
    if (r.evaluated > 0) r.verdict = std::isnan(r.t_first_fail) ? Verdict::Pass : Verdict::Fail;
    return r;
}

/// Theorem-1 reading: S = y_z, supply -K (y_z - y_ref) + dy_ref/dt + Qd_in, evaluated where the
/// hypothesis eta_tilde <= Qd_in holds. The proof manipulates the signed error; samples where the
/// -K |y_z - y_ref| reading would decide differently are counted in the note.
[[nodiscard]] inline AuditResult audit_dissipativity_feedback(const std::vector<Sample>& s, double K,
                                                              double tol_rel = 1e-3) {
    auto t = detail::column(s, [](const Sample& x) { return x.t; });
    auto S = detail::column(s, [](const Sample& x) { return x.y_z; });
    auto sup = detail::column(s, [K](const Sample& x) { return -K * x.sigma + x.y_ref_rate + x.in1.Qd; });
    const auto kinks = detail::load_kinks(s);
    std::vector<char> mask;
    for (std::size_t k = 0; k < s.size(); ++k)
        mask.push_back(kinks[k] ? kBoundary : (s[k].eta_tilde <= s[k].in1.Qd ? kEvaluate : kSkip));
    auto r = audit_storage_supply(t, S, sup, mask, "dissipativity", "d(y_z)/dt <= -K (y_z - y_ref) + dy_ref/dt + Qd_in",
                                  tol_rel);
    if (t.size() >= 3) {
        const auto dS = detail::derivative(t, S);
        std::size_t disagree = 0;
        for (std::size_t k = 1; k + 1 < t.size(); ++k) {
            if (mask[k] != kEvaluate) continue;
            const bool signed_ok = dS[k] <= sup[k] + r.tolerance;
            const bool abs_ok = dS[k] <= sup[k] + K * s[k].sigma - K * std::abs(s[k].sigma) + r.tolerance;
            disagree += signed_ok != abs_ok;
        }
        r.note = "signed and |e| readings disagree at " + std::to_string(disagree) + " samples";
    }
    return r;
}

/// Sliding-mode reading: S = sigma^2 / 2, supply -K |sigma|. Samples with |sigma| inside the band a
/// sampled switching law can resolve (|sigma| <= band) are boundary cases.
[[nodiscard]] inline AuditResult audit_dissipativity_sliding(const std::vector<Sample>& s, double K, double band,
                                                             double tol_rel = 1e-3) {
    auto t = detail::column(s, [](const Sample& x) { return x.t; });
    auto S = detail::column(s, [](const Sample& x) { return 0.5 * x.sigma * x.sigma; });
    auto sup = detail::column(s, [K](const Sample& x) { return -K * std::abs(x.sigma); });
    std::vector<char> mask;
    // Both neighbours matter: the central difference straddles them.
    for (std::size_t k = 0; k < s.size(); ++k) {
        bool ok = std::abs(s[k].sigma) > band;
        if (k > 0) ok = ok && std::abs(s[k - 1].sigma) > band;
        if (k + 1 < s.size()) ok = ok && std::abs(s[k + 1].sigma) > band;
        mask.push_back(ok ? kEvaluate : kBoundary);
    }
    auto r = audit_storage_supply(t, S, sup, mask, "dissipativity", "d(sigma^2/2)/dt <= -K |sigma|", tol_rel);
    if (r.evaluated == 0 && t.size() >= 3) {
        r.verdict = Verdict::Pass;
        r.worst_margin = 0.0;
        r.note = "sigma stayed inside the sliding band at every sample";
    }
    return r;
}

/// Lemma-1 storage: S = int 4 E_t + E/tau (E/tau written as D), supply dP_in/dt + Qd_in.
[[nodiscard]] inline AuditResult audit_dissipativity_storage(const std::vector<Sample>& s, double tol_rel = 1e-3) {
    auto t = detail::column(s, [](const Sample& x) { return x.t; });
    auto four_Et = detail::column(s, [](const Sample& x) { return 4.0 * x.E_t; });
    auto S = detail::cumulative_trapezoid(t, four_Et);
    for (std::size_t k = 0; k < S.size(); ++k) S[k] += s[k].D;
    auto P_in = detail::column(s, [](const Sample& x) { return x.in1.P; });
    auto dP_in = t.size() >= 2 ? detail::derivative(t, P_in) : std::vector<double>(t.size(), 0.0);
    std::vector<double> sup(s.size());
    for (std::size_t k = 0; k < s.size(); ++k) sup[k] = dP_in[k] + s[k].in1.Qd;
    auto mask = detail::load_kinks(s);
    for (auto& m : mask) m = m ? kBoundary : kEvaluate;
    return audit_storage_supply(t, S, sup, mask, "storage", "d(int 4E_t + D)/dt <= dP_in/dt + Qd_in", tol_rel);
}

// =============================================================================
// Theorem 1 (2): pointwise stability condition
// =============================================================================

/// |eta_tilde - 4 E_t| <= K |y_z - y_ref| pointwise. Samples with |e| <= e_floor, or adjacent to a
/// sign change of e, are boundary cases (the condition cannot hold there unless E_t = 0).
[[nodiscard]] inline AuditResult audit_fblc_stability(const std::vector<Sample>& s, double K, double e_floor = 0.0) {
    AuditResult r;
    r.check = "fblc_stability";
    r.inequality = "|eta_tilde - 4 E_t| <= K |y_z - y_ref|";
    for (std::size_t k = 0; k < s.size(); ++k) {
        const double e = s[k].sigma;
        const bool crossing = (k > 0 && e * s[k - 1].sigma <= 0.0) || (k + 1 < s.size() && e * s[k + 1].sigma <= 0.0);
        if (std::abs(e) <= e_floor || crossing) {
            ++r.boundary;
            continue;
        }
        ++r.evaluated;
        const double m = K * std::abs(e) - std::abs(s[k].eta_tilde - 4.0 * s[k].E_t);
        if (m < r.worst_margin) {
            r.worst_margin = m;
            r.t_worst = s[k].t;
        }
        if (m < 0.0 && std::isnan(r.t_first_fail)) r.t_first_fail = s[k].t;
    }
    if (r.evaluated > 0) r.verdict = std::isnan(r.t_first_fail) ? Verdict::Pass : Verdict::Fail;
    return r;
}

// =============================================================================
// Theorem 2: reaching time
// =============================================================================

struct ReachingResult {
    double sigma0 = 0.0;
    double t_reach = 0.0;
    double bound_theorem = 0.0;  ///< (2 / K) |sigma(0)|
    double bound_proof = 0.0;    ///< (sqrt 2 / K) |sigma(0)|
    Verdict verdict = Verdict::Pass;
    Verdict verdict_proof = Verdict::Pass;
};

/// First zero of sigma (linear interpolation between recorded samples) against both bounds.
/// Throws NoReaching when sigma keeps its sign over the whole record.
[[nodiscard]] inline ReachingResult audit_smc_reaching(const std::vector<Sample>& s, double K) {
    if (!(K > 0.0)) throw ContractViolation("audit_smc_reaching: K must be positive");
    if (s.empty()) throw NoReaching("empty trajectory");
    ReachingResult r;
    r.sigma0 = s.front().sigma;
    r.bound_theorem = 2.0 / K * std::abs(r.sigma0);
    r.bound_proof = std::sqrt(2.0) / K * std::abs(r.sigma0);
    bool reached = r.sigma0 == 0.0;
    r.t_reach = s.front().t;
    for (std::size_t k = 1; k < s.size() && !reached; ++k) {
        const double a = s[k - 1].sigma, b = s[k].sigma;
        if (b == 0.0 || (a > 0.0) != (b > 0.0)) {
            const double w = b == a ? 1.0 : a / (a - b);
            r.t_reach = s[k - 1].t + w * (s[k].t - s[k - 1].t);
            reached = true;
        }
    }
    if (!reached)
        throw NoReaching("sigma never crossed zero before t = " + std::to_string(s.back().t) +
                         " s (theorem bound " + std::to_string(r.bound_theorem) + " s)");
    const double elapsed = r.t_reach - s.front().t;
    r.verdict = elapsed <= r.bound_theorem ? Verdict::Pass : Verdict::Fail;
    r.verdict_proof = elapsed <= r.bound_proof ? Verdict::Pass : Verdict::Fail;
    return r;
}

// =============================================================================
// Theorem 3: network Lyapunov aggregate
// =============================================================================

struct WindowMargin {
    std::size_t k = 0;
    double worst_margin = std::numeric_limits<double>::infinity();
    double t_worst = std::numeric_limits<double>::quiet_NaN();
    bool pass = true;
};

struct NetworkAudit {
    AuditResult result;
    std::vector<WindowMargin> windows;
};

/// d/dt [1^T (I + L) S] <= tol pointwise, grouped by windows of length `window` from t[0].
/// S holds one storage series per component; tol = tol_rel * max_t sum_i (1 + deg_i) |dS_i/dt|.
[[nodiscard]] inline NetworkAudit audit_network_lyapunov(std::span<const double> t,
                                                         const std::vector<std::vector<double>>& S,
                                                         const Eigen::MatrixXd& adjacency, double window,
                                                         double tol_rel = 1e-3) {
    const auto n = static_cast<Eigen::Index>(S.size());
    if (adjacency.rows() != n || adjacency.cols() != n) throw ContractViolation("adjacency must be |N| x |N|");
    if (!adjacency.isApprox(adjacency.transpose())) throw ContractViolation("adjacency must be symmetric");
    if (!(window > 0.0)) throw ContractViolation("window must be positive");
    for (const auto& x : S)
        if (x.size() != t.size()) throw ContractViolation("storage series length differs from time grid");

    const Eigen::RowVectorXd w = Eigen::RowVectorXd::Ones(n) * (Eigen::MatrixXd::Identity(n, n) + adjacency);
    std::vector<double> V(t.size(), 0.0), scale(t.size(), 0.0);
    std::vector<std::vector<double>> dS;
    for (const auto& x : S) dS.push_back(t.size() >= 2 ? detail::derivative(t, x) : std::vector<double>(t.size(), 0.0));
    for (std::size_t k = 0; k < t.size(); ++k)
        for (Eigen::Index i = 0; i < n; ++i) {
            V[k] += w(i) * S[static_cast<std::size_t>(i)][k];
            scale[k] += std::abs(w(i)) * std::abs(dS[static_cast<std::size_t>(i)][k]);
        }
    std::vector<double> zero(t.size(), 0.0);
    NetworkAudit out;
    out.result = audit_storage_supply(t, V, zero, {}, "network_lyapunov", "d/dt [1^T (I + L) S] <= 0", 0.0);
    const double tol = tol_rel * (scale.empty() ? 0.0 : *std::max_element(scale.begin(), scale.end()));
    out.result.tolerance = tol;
    out.result.t_first_fail = std::numeric_limits<double>::quiet_NaN();
    if (t.size() < 3) return out;
    const auto dV = detail::derivative(t, V);
    for (std::size_t k = 1; k + 1 < t.size(); ++k) {
        const auto wk = static_cast<std::size_t>(std::floor((t[k] - t[0]) / window + 1e-9));
        while (out.windows.size() <= wk) out.windows.push_back({out.windows.size()});
        auto& wm = out.windows[wk];
        const double m = -dV[k];
        if (m < wm.worst_margin) {
            wm.worst_margin = m;
            wm.t_worst = t[k];
        }
        if (m < -tol) {
            wm.pass = false;
            if (std::isnan(out.result.t_first_fail)) out.result.t_first_fail = t[k];
        }
    }
    out.result.verdict = std::isnan(out.result.t_first_fail) ? Verdict::Pass : Verdict::Fail;
    std::size_t failed = 0;
    for (const auto& wm : out.windows) failed += !wm.pass;
    out.result.note = std::to_string(failed) + " of " + std::to_string(out.windows.size()) + " windows fail";
    return out;
}

/// Closed-loop storages of the source (int 4 E_t + D) and of the load (int of Pdot_out + Qd_out).
[[nodiscard]] inline std::vector<std::vector<double>> source_load_storages(const std::vector<Sample>& s) {
    auto t = detail::column(s, [](const Sample& x) { return x.t; });
    auto four_Et = detail::column(s, [](const Sample& x) { return 4.0 * x.E_t; });
    auto S1 = detail::cumulative_trapezoid(t, four_Et);
    for (std::size_t k = 0; k < s.size(); ++k) S1[k] += s[k].D;
    auto Q2 = detail::column(s, [](const Sample& x) { return x.out2.Qd; });
    auto S2 = detail::cumulative_trapezoid(t, Q2);
    for (std::size_t k = 0; k < s.size(); ++k) S2[k] += s[k].out2.P - s.front().out2.P;
    return {S1, S2};
}

// =============================================================================
// Metrics
// =============================================================================

struct SignalMetrics {
    double final_value = 0.0;
    double settling_time = 0.0;
    bool settled = true;
    double overshoot = 0.0;  ///< fraction of |final - initial|
    double peak_deviation = 0.0;  ///< max |x - final|
};

/// Settling into final +- band * max|x - final|. The final value is the mean of the last 10% of the
/// record; if that tail itself leaves the band the signal never settles and the horizon is reported.
[[nodiscard]] inline SignalMetrics signal_metrics(std::span<const double> t, std::span<const double> x, double band) {
    if (x.empty() || x.size() != t.size()) throw ContractViolation("signal_metrics: empty or mismatched series");
    if (!(band > 0.0)) throw ContractViolation("signal_metrics: band must be positive");
    SignalMetrics m;
    const std::size_t n = x.size();
    const std::size_t tail = std::max<std::size_t>(1, n / 10);
    m.final_value = std::accumulate(x.end() - static_cast<std::ptrdiff_t>(tail), x.end(), 0.0) / static_cast<double>(tail);
    for (double v : x) m.peak_deviation = std::max(m.peak_deviation, std::abs(v - m.final_value));
    const double tol = band * m.peak_deviation;
    // Constant up to the roundoff of the tail mean.
    if (m.peak_deviation <= 1e-12 * std::max(1.0, std::abs(m.final_value))) return m;
    for (std::size_t k = n - tail; k < n; ++k)
        if (std::abs(x[k] - m.final_value) > tol) {
            m.settled = false;
            m.settling_time = t.back() - t.front();
            break;
        }
    if (m.settled) {
        std::size_t last_out = n;
        for (std::size_t k = n; k-- > 0;)
            if (std::abs(x[k] - m.final_value) > tol) {
                last_out = k;
                break;
            }
        m.settling_time = last_out == n ? 0.0 : t[std::min(last_out + 1, n - 1)] - t.front();
    }
    // A signal that returns to where it started has no step to overshoot; peak_deviation covers it.
    const double step = m.final_value - x.front();
    if (std::abs(step) > band * m.peak_deviation) {
        double beyond = 0.0;
        for (double v : x) beyond = std::max(beyond, (v - m.final_value) * (step > 0 ? 1.0 : -1.0));
        m.overshoot = beyond / std::abs(step);
    }
    return m;
}

struct RunMetrics {
    SignalMetrics voltage;
    double rms_tracking = 0.0;  ///< RMS of y_z - y_ref, W
    double max_abs_du = 0.0;
    double t_max_abs_du = 0.0;
};

[[nodiscard]] inline RunMetrics metrics(const Trajectory& tr, double band = 0.02) {
    if (tr.empty()) throw ContractViolation("metrics: empty trajectory");
    RunMetrics m;
    auto t = detail::column(tr.samples, [](const Sample& x) { return x.t; });
    auto v = detail::column(tr.samples, [](const Sample& x) { return x.v; });
    m.voltage = signal_metrics(t, v, band);
    double acc = 0.0;
    for (const auto& s : tr.samples) acc += s.sigma * s.sigma;
    m.rms_tracking = std::sqrt(acc / static_cast<double>(tr.samples.size()));
    m.max_abs_du = tr.stats.max_abs_du;
    m.t_max_abs_du = tr.stats.t_max_abs_du;
    return m;
}

}  // namespace enspace
