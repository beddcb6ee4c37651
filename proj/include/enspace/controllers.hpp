#pragma once

#include <algorithm>
#include <cmath>
#include <optional>

#include "enspace/components.hpp"
#include "enspace/energy_space.hpp"
#include "enspace/errors.hpp"

namespace enspace {

// =============================================================================
// Configurations
// =============================================================================

/// When the lumped term (and the SMC switching decision) is sampled.
/// Step: once per integration step, held across the RK4 stages (causal).
/// Stage: at every stage (continuous-time idealization, used for convergence studies).
enum class Sampling { Step, Stage };

struct FblcConfig {
    double K = 100.0;
    double eta_error = 0.0;  ///< additive estimation error on eta_hat (W/s)
    Sampling sampling = Sampling::Step;

    void validate() const {
        if (!(K > 0.0)) throw ContractViolation("FBLC gain K must be positive");
    }
};

struct SmcConfig {
    double L_bar = 0.0;  ///< bound on the uncancelled nonlinearity (W/s)
    double K = 100.0;
    double boundary_layer = 0.0;  ///< 0 = pure sign, otherwise sat(sigma / boundary_layer)
    /// Subtract eta_hat before switching. Without it the switching gain must dominate the whole
    /// lumped term, which for the RLC lift is unbounded during reaching.
    bool equivalent_control = true;
    double eta_error = 0.0;
    Sampling sampling = Sampling::Step;

    [[nodiscard]] double alpha() const { return L_bar + K; }
    void validate() const {
        if (!(K > 0.0)) throw ContractViolation("SMC gain K must be positive");
        if (!(L_bar >= 0.0)) throw ContractViolation("SMC bound L_bar must be nonnegative");
        if (!(boundary_layer >= 0.0)) throw ContractViolation("SMC boundary layer must be nonnegative");
    }
};

struct ConstantGainConfig {
    double K1 = 0.4512;
    double K2 = 0.45;
    double u_ref = 80.15;
    double v_ref = 80.0;

    /// u_ref = v_ref + R P_l / v_ref
    static ConstantGainConfig for_load(double P_l, double R, double v_ref = 80.0, double K1 = 0.4512,
                                       double K2 = 0.45) {
        return {K1, K2, v_ref + R * P_l / v_ref, v_ref};
    }
};

struct BraytonMoserConfig {
    double K1 = 1.0;
    double K2 = 1.0;
    double K3 = 1.0;
    double Pi = 1600.0;

    void validate() const {
        if (!(K3 > 0.0) || !(Pi > 0.0)) throw ContractViolation("Brayton-Moser: K3 and Pi must be positive");
    }
};

struct ReferenceCommand {
    double y_ref = 0.0;
    double y_ref_rate = 0.0;
};

// =============================================================================
// References
// =============================================================================

/// y_ref = P_in with a causal two-point backward difference for its rate.
/// The first sample reports rate 0.
class ReferenceMap {
public:
    ReferenceCommand update(const InteractionRate& incoming, double t) {
        ReferenceCommand c{incoming.P, 0.0};
        if (prev_t_ && t > *prev_t_) c.y_ref_rate = (incoming.P - prev_P_) / (t - *prev_t_);
        else if (prev_t_) c.y_ref_rate = last_rate_;
        prev_t_ = t;
        prev_P_ = incoming.P;
        last_rate_ = c.y_ref_rate;
        return c;
    }
    void reset() { prev_t_.reset(); }

private:
    std::optional<double> prev_t_;
    double prev_P_ = 0.0;
    double last_rate_ = 0.0;
};

[[nodiscard]] inline ReferenceCommand reference_map(const InteractionRate& incoming) { return {incoming.P, 0.0}; }

/// y_ref = P_in y* / y,  dy_ref/dt = Pdot_in y* / y - P_in y* ydot / y^2
[[nodiscard]] inline ReferenceCommand regulation_reference(const InteractionRate& incoming, double incoming_P_rate,
                                                           double y, double y_rate, double y_setpoint) {
    if (std::abs(y) <= kEpsDiv) throw DegenerateState("regulation reference with measured output ~ 0");
    const double g = y_setpoint / y;
    return {incoming.P * g, incoming_P_rate * g - incoming.P * g * y_rate / y};
}

// =============================================================================
// Energy-space laws
// =============================================================================

/// sign with sign(0) = 0
[[nodiscard]] inline double sign0(double x) { return (x > 0.0) - (x < 0.0); }

[[nodiscard]] inline double saturate(double x) { return std::clamp(x, -1.0, 1.0); }

/// u_z = -eta_hat - K (y_z - y_ref) + dy_ref/dt
[[nodiscard]] inline double fblc_energy_control(const FblcConfig& cfg, double eta_hat, double y_z,
                                                const ReferenceCommand& ref) {
    return -eta_hat - cfg.K * (y_z - ref.y_ref) + ref.y_ref_rate;
}

/// sign(sigma), or sat(sigma / eps) inside a boundary layer.
[[nodiscard]] inline double smc_switch(const SmcConfig& cfg, double sigma) {
    return cfg.boundary_layer > 0.0 ? saturate(sigma / cfg.boundary_layer) : sign0(sigma);
}

/// u_z = -alpha s(sigma) + dy_ref/dt, preceded by -eta_hat when equivalent control is on.
[[nodiscard]] inline double smc_energy_control(const SmcConfig& cfg, double y_z, const ReferenceCommand& ref,
                                               double eta_hat = 0.0) {
    const double eq = cfg.equivalent_control ? -eta_hat : 0.0;
    return eq - cfg.alpha() * smc_switch(cfg, y_z - ref.y_ref) + ref.y_ref_rate;
}

/// du/dt = (u di/dt - u_z) / i, so that Qd_u = u di/dt - i du/dt equals u_z.
[[nodiscard]] inline double control_lift(double u, double i, double di, double u_z) {
    if (std::abs(i) <= kEpsDiv) throw DegenerateControlPort("control lift with port current ~ 0");
    return (u * di - u_z) / i;
}

// =============================================================================
// Benchmarks
// =============================================================================

/// u = u_ref - K1 i - K2 (v - v_ref)
[[nodiscard]] inline double constant_gain_control(const ConstantGainConfig& cfg, double i, double v) {
    return cfg.u_ref - cfg.K1 * i - cfg.K2 * (v - cfg.v_ref);
}

/// du/dt of the constant-gain law.
[[nodiscard]] inline double constant_gain_rate(const ConstantGainConfig& cfg, double di, double dv) {
    return -cfg.K1 * di - cfg.K2 * dv;
}

/// u = R i + v_ref - L (Pi / v^2 + K3) dv - (K1 (v - v_ref) + K2 dv)
[[nodiscard]] inline double brayton_moser_control(const BraytonMoserConfig& cfg, const RlcParams& p, double i,
                                                  double v, double dv, double v_ref) {
    if (std::abs(v) <= kEpsDiv) throw DegenerateState("Brayton-Moser law with v ~ 0");
    return p.R * i + v_ref - p.L * (cfg.Pi / (v * v) + cfg.K3) * dv - (cfg.K1 * (v - v_ref) + cfg.K2 * dv);
}

/// du/dt of the Brayton-Moser law given di, dv and d2v/dt2.
[[nodiscard]] inline double brayton_moser_rate(const BraytonMoserConfig& cfg, const RlcParams& p, double v,
                                               double di, double dv, double ddv) {
    if (std::abs(v) <= kEpsDiv) throw DegenerateState("Brayton-Moser law with v ~ 0");
    const double gain = cfg.Pi / (v * v) + cfg.K3;
    const double gain_rate = -2.0 * cfg.Pi * dv / (v * v * v);
    return p.R * di - p.L * (gain_rate * dv + gain * ddv) - (cfg.K1 * dv + cfg.K2 * ddv);
}

}  // namespace enspace
