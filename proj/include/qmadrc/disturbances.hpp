#pragma once

// Drag, ground effect, sinusoidal wind and centre-of-mass coupling, and
// their aggregation into the six lumped disturbance accelerations.

#include <algorithm>
#include <array>
#include <cmath>

#include "errors.hpp"
#include "state.hpp"

namespace qmadrc {

/// Masses and arm offset of the quadrotor + prismatic manipulator.
struct MassProperties {
    double m_q = 1.8;  ///< quadrotor mass (kg)
    double m_r = 0.2;  ///< manipulator mass (kg)
    double d0 = 0.0;   ///< quadrotor CoM reference offset (m)
    double d1 = 0.8;   ///< manipulator CoM distance from d0 (m)

    double total() const { return m_q + m_r; }

    void validate() const {
        if (!(m_q > 0.0)) throw InvalidParameter("m_q must be positive");
        if (!(m_r >= 0.0)) throw InvalidParameter("m_r must be non-negative");
        if (!std::isfinite(d0) || !std::isfinite(d1)) throw InvalidParameter("d0/d1 must be finite");
    }
};

/// Combined centre-of-mass offset along z.
inline double com_shift(const MassProperties& m) {
    const double total = m.m_q + m.m_r;
    if (!(total > 0.0)) throw InvalidParameter("com_shift: total mass must be positive");
    return (m.m_q * m.d0 + m.m_r * m.d1) / total;
}

struct DragParams {
    /// Per-axis coefficients for rates (x2, x4, x6, x8, x10, x12).
    std::array<double, 6> k{0.3729, 0.3729, 0.3729, 0.3729, 0.3729, 0.3729};

    void validate() const {
        for (double v : k)
            if (!(v >= 0.0)) throw InvalidParameter("drag coefficients must be non-negative");
    }
};

struct GroundEffectParams {
    double rho = 8.6;     ///< ground-effect coefficient
    double r = 0.1905;    ///< rotor radius (m)
    double z_min = 0.2;   ///< evaluation altitude floor (m)

    /// Altitude at which the thrust scaling becomes singular.
    double singular_altitude() const { return r * std::sqrt(rho) / 4.0; }

    void validate() const {
        if (!(rho > 0.0)) throw InvalidParameter("ground effect rho must be positive");
        if (!(r > 0.0)) throw InvalidParameter("rotor radius must be positive");
        if (!(z_min > singular_altitude()))
            throw InvalidParameter("ground effect z_min must exceed r*sqrt(rho)/4");
    }
};

/// One wind channel: alpha + beta*sin(n*t).
struct WindChannel {
    double alpha = 0.1;
    double beta = 1.0;
    double n = 1.0;  ///< rad/s
};

struct WindParams {
    std::array<WindChannel, 6> channel{};

    void validate() const {
        for (const auto& c : channel) {
            if (!std::isfinite(c.alpha) || !std::isfinite(c.beta))
                throw InvalidParameter("wind alpha/beta must be finite");
            if (!(c.n > 0.0) || !std::isfinite(c.n)) throw InvalidParameter("wind frequency must be positive");
        }
    }
};

struct DisturbanceFlags {
    bool drag = false;
    bool ground_effect = false;
    bool wind = false;
    bool com = false;

    static DisturbanceFlags all() { return {true, true, true, true}; }
    static DisturbanceFlags none() { return {}; }
};

struct DisturbanceParams {
    DragParams drag;
    GroundEffectParams ground;
    WindParams wind;
    DisturbanceFlags enabled;
    /// Keep the printed sign asymmetry of the yaw (+U) and heave (+k x8)
    /// rows. When false both use the conventional minus.
    bool strict_paper_signs = true;

    void validate() const {
        drag.validate();
        ground.validate();
        wind.validate();
    }
};

/// Six lumped accelerations (delta_a .. delta_f) plus the thrust scaling G.
struct DisturbanceOutputs {
    std::array<double, 6> delta{};
    double G = 1.0;

    double delta_a() const { return delta[0]; }
    double delta_b() const { return delta[1]; }
    double delta_c() const { return delta[2]; }
    double delta_d() const { return delta[3]; }
    double delta_e() const { return delta[4]; }
    double delta_f() const { return delta[5]; }
};

inline double drag(double k, double v) { return k * v; }

/// Thrust scaling near the ground. Altitude is clamped at z_min first.
inline double ground_effect_factor(double altitude, const GroundEffectParams& p) {
    const double h = std::max(altitude, p.z_min);
    const double q = p.r / (4.0 * h);
    return 1.0 / (1.0 - p.rho * q * q);
}

inline double wind(double t, const WindChannel& p) { return p.alpha + p.beta * std::sin(p.n * t); }

/// Coupling accelerations induced by the CoM offset z_G, in rate order
/// (x2, x4, x6, x8, x10, x12). Accelerations come from state.lagged_accel.
inline std::array<double, 6> com_effect(const QuadState& s, double z_G, double m) {
    const auto& acc = s.lagged_accel;
    const double x2 = s.phi_dot, x4 = s.theta_dot, x6 = s.psi_dot;
    const double x10 = s.x_dot, x12 = s.y_dot;
    const double mz = m * z_G;
    return {
        -mz * (acc[axis::sway] + x10 * x6),
        mz * (acc[axis::surge] - x12 * x6),
        mz * (x12 * x4 + x4 * x2),
        z_G * (x2 * x2 - x4 * x4),
        -z_G * (x2 * x6 - acc[axis::pitch]),
        -z_G * (x4 * x6 - acc[axis::roll]),
    };
}

/// Sums the enabled channels into the lumped disturbance rows.
inline DisturbanceOutputs lump(const QuadState& s, double t, const DisturbanceParams& p, double z_G, double m) {
    DisturbanceOutputs out;
    const auto v = s.rates();

    // Printed signs: the yaw row adds the CoM term and the heave row adds drag.
    const double com_yaw = p.strict_paper_signs ? 1.0 : -1.0;
    const double drag_heave = p.strict_paper_signs ? 1.0 : -1.0;

    if (p.enabled.com) {
        const auto u = com_effect(s, z_G, m);
        for (std::size_t i = 0; i < 6; ++i) out.delta[i] += (i == axis::yaw ? com_yaw : -1.0) * u[i];
    }
    if (p.enabled.drag) {
        for (std::size_t i = 0; i < 6; ++i)
            out.delta[i] += (i == axis::heave ? drag_heave : -1.0) * drag(p.drag.k[i], v[i]);
    }
    if (p.enabled.wind) {
        for (std::size_t i = 0; i < 6; ++i) out.delta[i] += wind(t, p.wind.channel[i]);
    }
    if (p.enabled.ground_effect) out.G = ground_effect_factor(s.altitude(), p.ground);
    return out;
}

}  // namespace qmadrc
