#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "enspace/components.hpp"
#include "enspace/controllers.hpp"
#include "enspace/energy_space.hpp"
#include "enspace/errors.hpp"
#include "enspace/trajectory.hpp"

namespace enspace {

// =============================================================================
// Scenario
// =============================================================================

enum class ControllerKind { Fblc, Smc, ConstantGain, BraytonMoser };
enum class ReferenceMode { Regulation, Interaction };

[[nodiscard]] inline const char* to_string(ControllerKind k) {
    switch (k) {
        case ControllerKind::Fblc: return "fblc";
        case ControllerKind::Smc: return "smc";
        case ControllerKind::ConstantGain: return "constant-gain";
        case ControllerKind::BraytonMoser: return "brayton-moser";
    }
    return "?";
}

struct ControllerSpec {
    ControllerKind kind = ControllerKind::Fblc;
    FblcConfig fblc;
    SmcConfig smc;
    bool smc_auto_bound = true;      ///< derive L_bar from an FBLC dry run
    double smc_bound_safety = 1.5;
    ConstantGainConfig constant_gain;
    bool constant_gain_auto_u_ref = true;  ///< u_ref = v_ref + R P_l(0) / v_ref
    BraytonMoserConfig brayton_moser;
    double v_ref = 80.0;
    ReferenceMode reference = ReferenceMode::Regulation;
    RlcParams model;  ///< parameters the controller believes in

    /// Gain that sets the voltage-dynamics time constant of the feasibility ranges.
    [[nodiscard]] double effective_gain() const {
        switch (kind) {
            case ControllerKind::Fblc: return fblc.K;
            case ControllerKind::Smc: return smc.K;
            case ControllerKind::ConstantGain: return constant_gain.K2;
            case ControllerKind::BraytonMoser: return brayton_moser.K1;
        }
        return 1.0;
    }
    [[nodiscard]] bool is_energy_controller() const {
        return kind == ControllerKind::Fblc || kind == ControllerKind::Smc;
    }
};

struct FeasibilitySettings {
    double window = 1.0;                                          ///< T_s
    double tau_prime = std::numeric_limits<double>::quiet_NaN();  ///< NaN = derive from the controller gain
    std::string schedule_csv;                                     ///< empty = derive from the load profile
};

struct Scenario {
    std::string name = "scenario";
    RlcParams plant;
    LoadProfile load = LoadProfile::constant(1200.0);
    LoadProfile matched = LoadProfile::constant(0.0);
    ControllerSpec controller;
    double i0 = 1.0;
    double v0 = 80.0;
    double u0 = std::numeric_limits<double>::quiet_NaN();  ///< NaN = v0 + R i0
    double t_end = 1.0;
    double dt = 1e-5;
    int decimation = 100;
    std::size_t tail_steps = 10000;
    double presettle = 0.0;  ///< settle on the frozen load P(0) for this long before t = 0
    FeasibilitySettings feasibility;

    void validate() const {
        plant.validate();
        controller.model.validate();
        load.validate_load();
        if (!(dt > 0.0)) throw ContractViolation("dt must be positive");
        if (!(t_end >= 0.0)) throw ContractViolation("t_end must be nonnegative");
        if (decimation < 1) throw ContractViolation("decimation must be >= 1");
        if (!(presettle >= 0.0)) throw ContractViolation("presettle must be nonnegative");
        if (!(feasibility.window >= dt)) throw ContractViolation("feasibility window must be >= dt");
        controller.fblc.validate();
        controller.smc.validate();
        controller.brayton_moser.validate();
    }
};

// =============================================================================
// Closed-loop evaluation
// =============================================================================

namespace detail {

struct Held {
    double eta_hat = 0.0;
    double sw = 0.0;
    double ref_rate = 0.0;
};

struct Pieces {
    std::size_t load = 0;
    std::size_t matched = 0;
};

}  // namespace detail

/// Fixed-step RK4 integration of the RLC source, its controller and the load.
class Simulator {
public:
    explicit Simulator(Scenario sc) : sc_(std::move(sc)) {
        sc_.validate();
        resolve();
    }

    /// Scenario with every automatic setting resolved (u0, u_ref, L_bar).
    [[nodiscard]] const Scenario& scenario() const { return sc_; }

    /// State at t = 0 after the optional presettling phase.
    [[nodiscard]] RlcState initial_state() const { return x0_; }

    /// A zero horizon yields an empty trajectory.
    [[nodiscard]] Trajectory run() {
        Trajectory tr;
        tr.dt = sc_.dt;
        tr.record_dt = sc_.dt * sc_.decimation;
        if (sc_.t_end <= 0.0) return tr;
        integrate(sc_.load, sc_.matched, x0_, sc_.t_end, &tr);
        return tr;
    }

    /// Full closed-loop sample at (t, x); held quantities are resampled at t.
    [[nodiscard]] Sample sample_at(double t, const RlcState& x) {
        detail::Pieces pc{sc_.load.piece_at(t), sc_.matched.piece_at(t)};
        ref_map_.reset();
        auto held = sample_held(t, x, sc_.load, sc_.matched, pc);
        return evaluate(t, x, held, sc_.load, sc_.matched, pc, true).full;
    }

private:
    bool is_static() const {
        return sc_.controller.kind == ControllerKind::ConstantGain ||
               sc_.controller.kind == ControllerKind::BraytonMoser;
    }

    void resolve() {
        auto& c = sc_.controller;
        if (c.kind == ControllerKind::ConstantGain && c.constant_gain_auto_u_ref) {
            c.constant_gain.v_ref = c.v_ref;
            c.constant_gain.u_ref = c.v_ref + c.model.R * sc_.load.eval(0.0).P / c.v_ref;
        }
        if (c.kind == ControllerKind::Smc && c.smc_auto_bound) {
            // Dry run with the FBLC of the same gain; L_bar bounds what the switching term must dominate.
            Scenario dry = sc_;
            dry.controller.kind = ControllerKind::Fblc;
            dry.controller.fblc.K = c.smc.K;
            dry.controller.fblc.eta_error = c.smc.eta_error;
            dry.controller.fblc.sampling = c.smc.sampling;
            dry.decimation = std::max<int>(1, static_cast<int>(std::llround(std::max(dry.t_end, dry.dt) / dry.dt)));
            dry.tail_steps = 0;
            Simulator ds(dry);
            auto tr = ds.run();
            const double sup = c.smc.equivalent_control ? tr.stats.sup_eta_residual : tr.stats.sup_eta_minus_4Et;
            c.smc.L_bar = c.smc_bound_safety * sup;
            c.smc_auto_bound = false;
        }
        const double u0 = std::isnan(sc_.u0) ? sc_.v0 + sc_.plant.R * sc_.i0 : sc_.u0;
        x0_ = {sc_.i0, sc_.v0, u0};
        if (is_static()) x0_.u = static_law(x0_, sc_.load.eval(0.0).P);
        if (sc_.presettle > 0.0) {
            const auto frozen_load = LoadProfile::constant(sc_.load.eval(0.0).P);
            const auto frozen_mm = LoadProfile::constant(sc_.matched.eval(0.0).P);
            x0_ = integrate(frozen_load, frozen_mm, x0_, sc_.presettle, nullptr);
        }
    }

    double static_law(const RlcState& x, double P_l) const {
        const auto& c = sc_.controller;
        if (c.kind == ControllerKind::ConstantGain) return constant_gain_control(c.constant_gain, x.i, x.v);
        const double dv = (x.i - cpl_current(P_l, x.v)) / sc_.plant.C;
        return brayton_moser_control(c.brayton_moser, c.model, x.i, x.v, dv, c.v_ref);
    }

    detail::Held sample_held(double t, const RlcState& x, const LoadProfile& load, const LoadProfile& mm,
                             const detail::Pieces& pc) {
        detail::Held h;
        auto pl = load.eval_piece(pc.load, t);
        if (sc_.controller.reference == ReferenceMode::Interaction)
            h.ref_rate = ref_map_.update(InteractionRate{-pl.P, 0.0}, t).y_ref_rate;
        if (is_static()) return h;
        auto s = evaluate(t, x, h, load, mm, pc, false);
        h.eta_hat = s.eta_hat_model;
        h.sw = smc_switch(sc_.controller.smc, s.sigma);
        return h;
    }

    struct Eval {
        double di, dv, du;
        double eta_hat_model;
        double sigma;
        Sample full;
    };

    Eval evaluate(double t, const RlcState& x_in, const detail::Held& held, const LoadProfile& load,
                  const LoadProfile& mm, const detail::Pieces& pc, bool full) const {
        const auto& c = sc_.controller;
        const auto& P = sc_.plant;
        const auto pl = load.eval_piece(pc.load, t);
        const auto pm = mm.eval_piece(pc.matched, t);
        RlcState x = x_in;
        if (is_static()) x.u = static_law(x, pl.P);

        const RlcDerivative d = rlc_state_derivative(x, P, pm.P, -pl.P);
        const double i2 = cpl_current(pl.P, x.v);
        const double di2 = cpl_current_rate(pl.P, pl.P_rate, x.v, d.dv);
        const InteractionRate incoming = cpl_incoming_rate(pl.P, pl.P_rate, x.v, d.dv);
        const double y = rlc_energy_output(x, P, pm.P);

        ReferenceCommand ref;
        if (c.reference == ReferenceMode::Regulation)
            ref = regulation_reference(incoming, -pl.P_rate, x.v, d.dv, c.v_ref);
        else
            ref = {incoming.P, held.ref_rate};
        const double sigma = y - ref.y_ref;

        const double eta = rlc_normal_form_eta(x, P, d, pm.P_rate);
        double eta_hat_model = rlc_normal_form_eta(x, c.model, d, pm.P_rate);
        double eta_hat = 0.0, u_z = 0.0, du = 0.0;
        const double ddv = (d.di - di2) / P.C;
        switch (c.kind) {
            case ControllerKind::Fblc: {
                eta_hat_model += c.fblc.eta_error;
                eta_hat = c.fblc.sampling == Sampling::Stage ? eta_hat_model : held.eta_hat;
                u_z = fblc_energy_control(c.fblc, eta_hat, y, ref);
                du = control_lift(x.u, x.i, d.di, u_z);
                break;
            }
            case ControllerKind::Smc: {
                eta_hat_model += c.smc.eta_error;
                const bool stage = c.smc.sampling == Sampling::Stage;
                eta_hat = c.smc.equivalent_control ? (stage ? eta_hat_model : held.eta_hat) : 0.0;
                const double sw = stage ? smc_switch(c.smc, sigma) : held.sw;
                u_z = -eta_hat - c.smc.alpha() * sw + ref.y_ref_rate;
                du = control_lift(x.u, x.i, d.di, u_z);
                break;
            }
            case ControllerKind::ConstantGain:
                du = constant_gain_rate(c.constant_gain, d.di, d.dv);
                u_z = x.u * d.di - x.i * du;
                break;
            case ControllerKind::BraytonMoser:
                du = brayton_moser_rate(c.brayton_moser, c.model, x.v, d.di, d.dv, ddv);
                u_z = x.u * d.di - x.i * du;
                break;
        }

        Eval e{d.di, d.dv, du, eta_hat_model, sigma, {}};
        if (!full) return e;

        Sample& s = e.full;
        s.t = t;
        s.i = x.i;
        s.v = x.v;
        s.u = x.u;
        s.di = d.di;
        s.dv = d.dv;
        s.du = du;
        s.y_z = y;
        s.y_ref = ref.y_ref;
        s.y_ref_rate = ref.y_ref_rate;
        s.u_z = u_z;
        s.sigma = sigma;
        s.E = 0.5 * (P.L * x.i * x.i + P.C * x.v * x.v);
        s.p = P.L * x.i * d.di + P.C * x.v * d.dv;
        s.E_t = rlc_tangent_energy(d, P);
        s.D = P.R * x.i * x.i;
        s.tau = s.D > kEpsDiv ? s.E / s.D : std::numeric_limits<double>::infinity();
        s.eta = eta;
        s.eta_hat = eta_hat;
        s.eta_tilde = eta - eta_hat;
        s.P_l = pl.P;
        s.P_l_rate = pl.P_rate;
        s.P_mm = pm.P;

        // Second derivatives for pdot.
        double dmm = 0.0;  // d/dt (P_mm / i)
        if (pm.P != 0.0 || pm.P_rate != 0.0) dmm = pm.P_rate / x.i - pm.P * d.di / (x.i * x.i);
        const double ddi = (-P.R * d.di - d.dv + du + dmm) / P.L;
        s.p_dot = P.L * (d.di * d.di + x.i * ddi) + P.C * (d.dv * d.dv + x.v * ddv);

        s.control = port_rate(PortSignal{x.u, x.i, du, d.di});
        if (pm.P != 0.0 || pm.P_rate != 0.0) s.matched = port_rate(PortSignal{pm.P / x.i, x.i, dmm, d.di});
        s.Qd_cap = rlc_capacitor_reactive_rate(x, d, i2, di2);

        // The capacitor stores energy in its effort variable, which flips the sign of its
        // tangent-energy contribution; 2 Qd_cap restores the port-level balance.
        s.out1 = outgoing_interaction_rate(EnergyBalance{s.p, s.p_dot, s.E_t, s.D}, s.control, s.matched) +
                 InteractionRate{0.0, 2.0 * s.Qd_cap};
        s.in1 = incoming;
        s.out2 = port_rate(PortSignal{x.v, i2, d.dv, di2});
        s.in2 = -s.out1;
        return e;
    }

    RlcState integrate(const LoadProfile& load, const LoadProfile& mm, RlcState x, double t_end, Trajectory* tr) {
        const double dt = sc_.dt;
        const auto n_steps = static_cast<long long>(std::ceil(t_end / dt - 1e-9));
        const int dec = sc_.decimation;
        ref_map_.reset();
        std::vector<Sample> ring;
        std::size_t ring_pos = 0;
        const std::size_t tail_cap = tr ? sc_.tail_steps : 0;
        if (tr) tr->samples.reserve(static_cast<std::size_t>(n_steps / dec + 2));

        auto guard = [&](double t, const RlcState& s) {
            if (!std::isfinite(s.i) || !std::isfinite(s.v) || !std::isfinite(s.u))
                throw SimulationFailure(t, "state diverged (non-finite i, v or u)");
        };

        auto observe = [&](const Sample& s, bool record) {
            if (!tr) return;
            auto& st = tr->stats;
            if (std::abs(s.du) > st.max_abs_du) {
                st.max_abs_du = std::abs(s.du);
                st.t_max_abs_du = s.t;
            }
            st.sup_eta_residual = std::max(st.sup_eta_residual, std::abs(s.eta_tilde - 4.0 * s.E_t));
            st.sup_eta_minus_4Et = std::max(st.sup_eta_minus_4Et, std::abs(s.eta - 4.0 * s.E_t));
            st.max_junction_P = std::max(st.max_junction_P, std::abs(s.out1.P + s.out2.P));
            st.max_junction_Qd = std::max(st.max_junction_Qd, std::abs(s.out1.Qd + s.out2.Qd));
            st.peak_P = std::max({st.peak_P, std::abs(s.out1.P), std::abs(s.out2.P)});
            st.peak_Qd = std::max({st.peak_Qd, std::abs(s.out1.Qd), std::abs(s.out2.Qd)});
            if (record) tr->samples.push_back(s);
            if (tail_cap > 0) {
                if (ring.size() < tail_cap) ring.push_back(s);
                else ring[ring_pos] = s;
                ring_pos = (ring_pos + 1) % tail_cap;
            }
        };

        try {
            for (long long n = 0; n < n_steps; ++n) {
                const double t0 = static_cast<double>(n) * dt;
                const double t1 = std::min(static_cast<double>(n + 1) * dt, t_end);
                std::vector<double> cuts{t0};
                for (double b : load.breakpoints_in(t0, t1))
                    if (b < t1) cuts.push_back(b);
                for (double b : mm.breakpoints_in(t0, t1))
                    if (b < t1) cuts.push_back(b);
                std::sort(cuts.begin(), cuts.end());
                cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
                cuts.push_back(t1);
                for (std::size_t j = 0; j + 1 < cuts.size(); ++j) {
                    const double a = cuts[j], b = cuts[j + 1];
                    const double mid = 0.5 * (a + b);
                    const detail::Pieces pc{load.piece_at(mid), mm.piece_at(mid)};
                    const auto held = sample_held(a, x, load, mm, pc);
                    if (j == 0 && tr) {
                        auto e = evaluate(a, x, held, load, mm, pc, true);
                        observe(e.full, n % dec == 0);
                    }
                    x = rk4(a, b - a, x, held, load, mm, pc);
                    guard(b, x);
                }
                if (tr) ++tr->stats.steps;
            }
            if (tr && n_steps % dec == 0) {
                const double t = static_cast<double>(n_steps) * dt;
                const double te = std::min(t, t_end);
                const detail::Pieces pc{load.piece_at(te), mm.piece_at(te)};
                const auto held = sample_held(te, x, load, mm, pc);
                observe(evaluate(te, x, held, load, mm, pc, true).full, true);
            }
        } catch (const SimulationFailure&) {
            throw;
        } catch (const Error& err) {
            throw SimulationFailure(tr && !tr->samples.empty() ? tr->samples.back().t : 0.0, err.what());
        }
        if (tr && !ring.empty()) {
            std::rotate(ring.begin(), ring.begin() + static_cast<std::ptrdiff_t>(ring_pos % ring.size()), ring.end());
            tr->tail = std::move(ring);
        }
        return x;
    }

    RlcState rk4(double t, double h, const RlcState& x, const detail::Held& held, const LoadProfile& load,
                 const LoadProfile& mm, const detail::Pieces& pc) const {
        const bool st = is_static();
        auto f = [&](double tt, const RlcState& s) {
            auto e = evaluate(tt, s, held, load, mm, pc, false);
            return std::array<double, 3>{e.di, e.dv, st ? 0.0 : e.du};
        };
        auto add = [](const RlcState& s, const std::array<double, 3>& k, double w) {
            return RlcState{s.i + w * k[0], s.v + w * k[1], s.u + w * k[2]};
        };
        const auto k1 = f(t, x);
        const auto k2 = f(t + 0.5 * h, add(x, k1, 0.5 * h));
        const auto k3 = f(t + 0.5 * h, add(x, k2, 0.5 * h));
        const auto k4 = f(t + h, add(x, k3, h));
        RlcState n{x.i + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
                   x.v + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
                   x.u + h / 6.0 * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2])};
        if (st) n.u = static_law(n, load.eval_piece(pc.load, t + h).P);
        return n;
    }

    Scenario sc_;
    RlcState x0_;
    ReferenceMap ref_map_;
};

/// Runs the closed loop described by the scenario.
[[nodiscard]] inline Trajectory simulate(const Scenario& sc) {
    Simulator s(sc);
    return s.run();
}

// =============================================================================
// Energy state-space bookkeeping
// =============================================================================

struct EnergyResidual {
    double row_E = 0.0;  ///< W
    double row_p = 0.0;  ///< W/s
    double t_row_E = 0.0;
    double t_row_p = 0.0;
};

/// Checks xdot_z = A_z x_z + B_t E_t + B_z (z_out + z_u + z_m) against central differences of the
/// recorded [E, p]. B_z acts row-wise (+P on the E row, -Qd on the p row). The p row carries the
/// capacitor term 2 Qd_cap that the recorded outgoing rate includes.
[[nodiscard]] inline EnergyResidual energy_trajectory_residual(const std::vector<Sample>& s, double h) {
    EnergyResidual r;
    if (s.size() < 3) throw ContractViolation("energy_trajectory_residual needs at least 3 samples");
    for (std::size_t k = 1; k + 1 < s.size(); ++k) {
        const auto& c = s[k];
        const double E_dot = (s[k + 1].E - s[k - 1].E) / (2.0 * h);
        const double p_dot = (s[k + 1].p - s[k - 1].p) / (2.0 * h);
        const double inv_tau = std::isfinite(c.tau) && c.tau > 0.0 ? 1.0 / c.tau : 0.0;
        const EnergyMatrices m(inv_tau);
        const Eigen::Vector2d xz(c.E, c.p);
        const Eigen::Vector2d drive(c.out1.P + c.control.P + c.matched.P,
                                    c.out1.Qd - 2.0 * c.Qd_cap + c.control.Qd + c.matched.Qd);
        Eigen::Vector2d rhs = m.A_z * xz + m.B_t * c.E_t + m.B_z.cwiseProduct(drive);
        const double rE = std::abs(E_dot - rhs(0));
        const double rp = std::abs(p_dot - rhs(1));
        if (rE > r.row_E) { r.row_E = rE; r.t_row_E = c.t; }
        if (rp > r.row_p) { r.row_p = rp; r.t_row_p = c.t; }
    }
    return r;
}

/// y_z = C_z x_z + D_z (z_u + z_m)
[[nodiscard]] inline double output_identity(const Sample& s) {
    const double inv_tau = std::isfinite(s.tau) && s.tau > 0.0 ? 1.0 / s.tau : 0.0;
    const EnergyMatrices m(inv_tau);
    const double Ez = inv_tau == 0.0 ? s.D : (m.C_z * Eigen::Vector2d(s.E, s.p))(0);
    return Ez + (m.D_z * Eigen::Vector2d(s.control.P + s.matched.P, s.control.Qd + s.matched.Qd))(0);
}

}  // namespace enspace
