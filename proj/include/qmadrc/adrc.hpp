#pragma once

// Linear ADRC for one second-order channel: extended state observer,
// disturbance cancellation and a PD law on the observer estimates.

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>

#include <Eigen/Core>

#include "errors.hpp"
#include "integrator.hpp"

namespace qmadrc {

enum class Subsystem { roll, pitch, yaw, altitude };

inline constexpr Subsystem kSubsystems[] = {Subsystem::roll, Subsystem::pitch, Subsystem::yaw, Subsystem::altitude};

inline std::string_view to_string(Subsystem s) {
    switch (s) {
        case Subsystem::roll: return "roll";
        case Subsystem::pitch: return "pitch";
        case Subsystem::yaw: return "yaw";
        case Subsystem::altitude: return "alt";
    }
    return "?";
}

/// Routh test for s^3 + p1 s^2 + p2 s + p3.
inline bool is_hurwitz(double p1, double p2, double p3) { return p1 > 0.0 && p3 > 0.0 && p1 * p2 > p3; }

/// Observer gains. Construction enforces the Hurwitz condition.
class EsoGains {
public:
    EsoGains() : EsoGains(table()) {}

    EsoGains(double p1, double p2, double p3) : p1_(p1), p2_(p2), p3_(p3) {
        if (!is_hurwitz(p1, p2, p3))
            throw ConfigError("ESO gains not Hurwitz: need p1>0, p3>0, p1*p2>p3 (p1=" + std::to_string(p1) +
                              ", p2=" + std::to_string(p2) + ", p3=" + std::to_string(p3) + ")");
    }

    /// Tuned reference gains shared by all four channels.
    static EsoGains table() { return {29.5659, 2907.0, 3000.0}; }

    /// Places all three observer poles at -omega.
    static EsoGains from_bandwidth(double omega) { return {3.0 * omega, 3.0 * omega * omega, omega * omega * omega}; }

    double p1() const { return p1_; }
    double p2() const { return p2_; }
    double p3() const { return p3_; }

    EsoGains scaled(double c) const { return {c * p1_, c * c * p2_, c * c * c * p3_}; }

private:
    double p1_, p2_, p3_;
};

struct EsoState {
    double x1_hat = 0.0;  ///< output estimate
    double x2_hat = 0.0;  ///< rate estimate
    double x3_hat = 0.0;  ///< total disturbance estimate

    Eigen::Vector3d vector() const { return {x1_hat, x2_hat, x3_hat}; }
    static EsoState from_vector(const Eigen::Vector3d& v) { return {v[0], v[1], v[2]}; }
};

/// Advances the observer by dt with the measurement and input held.
inline EsoState eso_step(const EsoState& eso, double y, double u, double b_hat, const EsoGains& gains, double dt) {
    if (!(dt > 0.0)) throw InvalidParameter("eso_step: dt must be positive");
    const double bu = b_hat * u;
    auto f = [&](double, const Eigen::Vector3d& z) -> Eigen::Vector3d {
        const double e = y - z[0];
        return {z[1] + gains.p1() * e, z[2] + gains.p2() * e + bu, gains.p3() * e};
    };
    return EsoState::from_vector(rk4(f, 0.0, eso.vector(), dt));
}

struct PdGains {
    double kp = 1.0;
    double kd = 1.0;

    void validate() const {
        if (!(kp > 0.0) || !(kd > 0.0)) throw InvalidParameter("PD gains must be positive");
    }
};

/// Virtual control for the double integrator, from observer estimates.
inline double pd(double ref, double ref_rate, double x1_hat, double x2_hat, const PdGains& g) {
    return g.kp * (ref - x1_hat) + g.kd * (ref_rate - x2_hat);
}

struct ControlLimits {
    double lower = -5.0;
    double upper = 5.0;
};

inline constexpr double kDefaultBMin = 0.05;

struct CancelResult {
    double u = 0.0;
    bool saturated = false;
    bool degenerate = false;  ///< |b_hat| was below b_min and got clamped
};

/// Clamps |b_hat| to at least b_min, keeping its sign (zero counts as negative).
inline double clamp_b_hat(double b_hat, double b_min, bool* degenerate = nullptr) {
    const bool low = !(std::abs(b_hat) >= b_min);
    if (degenerate) *degenerate = low;
    if (!low) return b_hat;
    return b_hat > 0.0 ? b_min : -b_min;
}

/// u = (u0 - F_hat) / b_hat, then saturated to the limits.
inline CancelResult cancel(double u0, double f_hat, double b_hat, const ControlLimits& limits,
                           double b_min = kDefaultBMin) {
    CancelResult r;
    const double b = clamp_b_hat(b_hat, b_min, &r.degenerate);
    const double raw = (u0 - f_hat) / b;
    r.u = std::clamp(raw, limits.lower, limits.upper);
    r.saturated = r.u != raw;
    return r;
}

struct BHat {
    double value = 0.0;
    bool degenerate = false;
};

/// Control effectiveness of the heave channel, -(G/m) cos(theta) cos(phi).
inline BHat b_hat_altitude(double phi, double theta, double G, double m, double b_min = kDefaultBMin) {
    BHat r;
    r.value = clamp_b_hat(-(G / m) * std::cos(theta) * std::cos(phi), b_min, &r.degenerate);
    return r;
}

struct SubsystemConfig {
    Subsystem which = Subsystem::roll;
    EsoGains eso = EsoGains::table();
    PdGains pd;
    ControlLimits limits;
    double b_min = kDefaultBMin;
};

/// Per-step values exposed for logging.
struct AdrcDiagnostics {
    double u = 0.0;
    double u0 = 0.0;
    double f_hat = 0.0;
    double innovation = 0.0;  ///< y - x1_hat after the observer update
    double b_hat = 0.0;
    bool saturated = false;
    bool degenerate = false;
};

/// Mutable per-channel memory: observer estimates and the last applied input.
struct ControllerState {
    EsoState eso;
    double u_prev = 0.0;
    double b_prev = 0.0;
};

struct AdrcStep {
    ControllerState state;
    AdrcDiagnostics diag;
};

/// Observer update with the previous input, PD on the estimates, cancellation, saturation.
inline AdrcStep adrc_controller_step(const SubsystemConfig& cfg, const ControllerState& st, double y, double ref,
                                     double ref_rate, double b_hat, double dt) {
    AdrcStep out;
    out.state.eso = eso_step(st.eso, y, st.u_prev, st.b_prev, cfg.eso, dt);
    const EsoState& e = out.state.eso;

    AdrcDiagnostics& d = out.diag;
    d.u0 = pd(ref, ref_rate, e.x1_hat, e.x2_hat, cfg.pd);
    d.f_hat = e.x3_hat;
    d.innovation = y - e.x1_hat;
    const CancelResult c = cancel(d.u0, d.f_hat, b_hat, cfg.limits, cfg.b_min);
    d.u = c.u;
    d.saturated = c.saturated;
    d.degenerate = c.degenerate;
    d.b_hat = clamp_b_hat(b_hat, cfg.b_min);

    out.state.u_prev = d.u;
    out.state.b_prev = d.b_hat;
    return out;
}

/// One ADRC channel with its own observer memory.
class AdrcController {
public:
    explicit AdrcController(SubsystemConfig cfg) : cfg_(std::move(cfg)) {}

    /// Observer starts at the first measurement with zero rate and disturbance.
    void initialize(double y0) { state_ = ControllerState{{y0, 0.0, 0.0}, 0.0, 0.0}; }

    AdrcDiagnostics step(double y, double ref, double ref_rate, double b_hat, double dt) {
        AdrcStep s = adrc_controller_step(cfg_, state_, y, ref, ref_rate, b_hat, dt);
        state_ = s.state;
        return s.diag;
    }

    const SubsystemConfig& config() const { return cfg_; }
    const ControllerState& state() const { return state_; }
    const EsoState& eso() const { return state_.eso; }

private:
    SubsystemConfig cfg_;
    ControllerState state_;
};

}  // namespace qmadrc
