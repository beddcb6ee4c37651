#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "enspace/errors.hpp"

namespace enspace {

// =============================================================================
// Port signals
// =============================================================================

/// Effort/flow pair at a port plus their time derivatives (V, A, V/s, A/s).
struct PortSignal {
    double effort = 0.0;
    double flow = 0.0;
    double effort_rate = 0.0;
    double flow_rate = 0.0;
};

/// P = e f
[[nodiscard]] inline double instantaneous_power(const PortSignal& s) { return s.effort * s.flow; }

/// Qdot = e df/dt - f de/dt
[[nodiscard]] inline double reactive_power_rate(const PortSignal& s) {
    return s.effort * s.flow_rate - s.flow * s.effort_rate;
}

/// Same port with effort and flow roles exchanged.
[[nodiscard]] inline PortSignal swapped(const PortSignal& s) {
    return {s.flow, s.effort, s.flow_rate, s.effort_rate};
}

// =============================================================================
// Quadratic energy model
// =============================================================================

/// Constant inertia H (SPD) and dissipation B (SPSD) matrices of a component.
class QuadraticEnergyModel {
public:
    QuadraticEnergyModel(Eigen::MatrixXd inertia, Eigen::MatrixXd dissipation)
        : H_(std::move(inertia)), B_(std::move(dissipation)) {
        if (H_.rows() != H_.cols() || B_.rows() != B_.cols() || H_.rows() != B_.rows() || H_.rows() == 0)
            throw ContractViolation("energy model: H and B must be square and of equal size");
        if (!H_.isApprox(H_.transpose()) || !B_.isApprox(B_.transpose()))
            throw ContractViolation("energy model: H and B must be symmetric");
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eh(H_), eb(B_);
        if (eh.eigenvalues().minCoeff() <= 0.0)
            throw ContractViolation("energy model: H must be positive definite");
        if (eb.eigenvalues().minCoeff() < -1e-12 * std::max(1.0, eb.eigenvalues().cwiseAbs().maxCoeff()))
            throw ContractViolation("energy model: B must be positive semidefinite");
    }

    [[nodiscard]] const Eigen::MatrixXd& inertia() const { return H_; }
    [[nodiscard]] const Eigen::MatrixXd& dissipation() const { return B_; }
    [[nodiscard]] Eigen::Index dim() const { return H_.rows(); }

    void check_dim(const Eigen::VectorXd& x) const {
        if (x.size() != dim()) throw ContractViolation("energy model: state dimension mismatch");
    }

private:
    Eigen::MatrixXd H_;
    Eigen::MatrixXd B_;
};

/// E = 1/2 x^T H x
[[nodiscard]] inline double stored_energy(const Eigen::VectorXd& x, const QuadraticEnergyModel& m) {
    m.check_dim(x);
    return 0.5 * x.dot(m.inertia() * x);
}

/// E_t = 1/2 xdot^T H xdot
[[nodiscard]] inline double tangent_energy(const Eigen::VectorXd& xdot, const QuadraticEnergyModel& m) {
    m.check_dim(xdot);
    return 0.5 * xdot.dot(m.inertia() * xdot);
}

/// D = x^T B x
[[nodiscard]] inline double dissipation(const Eigen::VectorXd& x, const QuadraticEnergyModel& m) {
    m.check_dim(x);
    return x.dot(m.dissipation() * x);
}

/// tau = E / D. Throws DegenerateDissipation when D <= kEpsDiv.
[[nodiscard]] inline double time_constant(const Eigen::VectorXd& x, const QuadraticEnergyModel& m) {
    const double D = dissipation(x, m);
    if (D <= kEpsDiv) throw DegenerateDissipation("time constant undefined: dissipation is zero");
    return stored_energy(x, m) / D;
}

// =============================================================================
// Energy state and interaction rates
// =============================================================================

/// x_z = [E, p] plus E_t and tau. tau is +inf when the dissipation vanishes.
struct EnergyState {
    double E = 0.0;
    double p = 0.0;
    double E_t = 0.0;
    double tau = std::numeric_limits<double>::infinity();
};

/// zdot = [P, Qdot]. Direction (in/out, which port) is carried by the variable name.
struct InteractionRate {
    double P = 0.0;
    double Qd = 0.0;

    friend InteractionRate operator+(InteractionRate a, InteractionRate b) { return {a.P + b.P, a.Qd + b.Qd}; }
    friend InteractionRate operator-(InteractionRate a, InteractionRate b) { return {a.P - b.P, a.Qd - b.Qd}; }
    friend InteractionRate operator-(InteractionRate a) { return {-a.P, -a.Qd}; }
    friend InteractionRate operator*(double k, InteractionRate a) { return {k * a.P, k * a.Qd}; }
    friend bool operator==(const InteractionRate&, const InteractionRate&) = default;
};

[[nodiscard]] inline InteractionRate port_rate(const PortSignal& s) {
    return {instantaneous_power(s), reactive_power_rate(s)};
}

/// Accumulated interaction variable z(t) = integral of zdot from 0 (J, W).
struct InteractionVariable {
    double energy = 0.0;
    double reactive = 0.0;
};

/// Energy-side inputs of the outgoing rate. D stands in for E/tau.
struct EnergyBalance {
    double p = 0.0;
    double p_dot = 0.0;
    double E_t = 0.0;
    double D = 0.0;
};

/// P_out = p + E/tau - P_u - P_m,  Qd_out = -pdot + 4 E_t - Qd_u - Qd_m
[[nodiscard]] inline InteractionRate outgoing_interaction_rate(const EnergyBalance& b, InteractionRate control,
                                                               InteractionRate matched) {
    return {b.p + b.D - control.P - matched.P, -b.p_dot + 4.0 * b.E_t - control.Qd - matched.Qd};
}

/// Same rate written with the E/tau term; tau must be positive and finite.
[[nodiscard]] inline InteractionRate outgoing_interaction_rate(double E, double tau, double p, double p_dot, double E_t,
                                                               InteractionRate control, InteractionRate matched) {
    if (!(tau > 0.0) || !std::isfinite(tau))
        throw DegenerateDissipation("outgoing rate: E/tau form needs 0 < tau < inf");
    return outgoing_interaction_rate(EnergyBalance{p, p_dot, E_t, E / tau}, control, matched);
}

/// Cumulative trapezoidal integral of a uniformly sampled rate, starting at 0.
[[nodiscard]] inline std::vector<InteractionVariable> integrate_interaction(std::span<const InteractionRate> rates,
                                                                            double dt) {
    if (!(dt > 0.0)) throw ContractViolation("integrate_interaction: dt must be positive");
    std::vector<InteractionVariable> out;
    out.reserve(rates.size());
    if (rates.empty()) return out;
    InteractionVariable acc;
    out.push_back(acc);
    for (std::size_t k = 1; k < rates.size(); ++k) {
        acc.energy += 0.5 * dt * (rates[k - 1].P + rates[k].P);
        acc.reactive += 0.5 * dt * (rates[k - 1].Qd + rates[k].Qd);
        out.push_back(acc);
    }
    return out;
}

// =============================================================================
// Energy-space output and normal form
// =============================================================================

/// y_z = E/tau - P_u - P_m, written with D.
[[nodiscard]] inline double energy_output(double D, double P_u, double P_m) { return D - P_u - P_m; }

/// The lumped term of dy_z/dt = -4 E_t + eta + Qd_u.
///
/// With P_out, Qd_out taken from outgoing_interaction_rate, eta = Pdot_out + Qd_out + Qd_m, and
/// pdot cancels, leaving  eta = Ddot + 4 E_t - (Pdot_u + Qd_u) - Pdot_m.  For a scalar port
/// Pdot_u + Qd_u = 2 e_u df_u/dt, so no derivative of the control itself is needed.
[[nodiscard]] inline double normal_form_eta(double D_rate, double E_t, double control_effort,
                                            double control_flow_rate, double matched_power_rate) {
    return D_rate + 4.0 * E_t - 2.0 * control_effort * control_flow_rate - matched_power_rate;
}

// =============================================================================
// Linear energy state-space matrices
// =============================================================================

/// A_z, C_z depend on the live tau; B_t, B_z, D_z are fixed.
struct EnergyMatrices {
    Eigen::Matrix2d A_z;
    Eigen::Vector2d B_t{0.0, 4.0};
    Eigen::Vector2d B_z{1.0, -1.0};
    Eigen::RowVector2d C_z;
    Eigen::RowVector2d D_z{-1.0, 0.0};

    /// inv_tau = 1/tau = D/E (0 when the component does not dissipate).
    explicit EnergyMatrices(double inv_tau) {
        A_z << -inv_tau, 0.0, 0.0, 0.0;
        C_z << inv_tau, 0.0;
    }
};

}  // namespace enspace
