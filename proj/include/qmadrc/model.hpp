#pragma once

// Quadrotor-manipulator plant: inertia composition, control allocation and
// the extended 12-state derivative.

#include <array>
#include <cmath>

#include <Eigen/Dense>

#include "disturbances.hpp"
#include "errors.hpp"
#include "state.hpp"

namespace qmadrc {

/// Principal inertias, rotor inertia, arm length and the derived
/// coefficients a1..a8 used by the rotational rows.
class InertiaParams {
public:
    InertiaParams() : InertiaParams(table()) {}

    static InertiaParams make(double I_xx, double I_yy, double I_zz, double J_r, double l) {
        if (!(I_xx > 0.0 && I_yy > 0.0 && I_zz > 0.0))
            throw InvalidParameter("principal inertias must be positive");
        if (!(J_r >= 0.0)) throw InvalidParameter("rotor inertia must be non-negative");
        if (!(l > 0.0)) throw InvalidParameter("arm length must be positive");
        return InertiaParams(I_xx, I_yy, I_zz, J_r, l);
    }

    /// Values from the reference airframe table.
    static InertiaParams table() { return InertiaParams(0.018, 0.018, 0.035, 6e-3, 0.45); }

    double I_xx() const { return I_xx_; }
    double I_yy() const { return I_yy_; }
    double I_zz() const { return I_zz_; }
    double J_r() const { return J_r_; }
    double l() const { return l_; }

    double a1() const { return (I_yy_ - I_zz_) / I_xx_; }
    double a2() const { return J_r_ / I_xx_; }
    double a3() const { return (I_zz_ - I_xx_) / I_yy_; }
    double a4() const { return J_r_ / I_yy_; }
    double a5() const { return (I_xx_ - I_yy_) / I_zz_; }
    double a6() const { return l_ / I_xx_; }
    double a7() const { return l_ / I_yy_; }
    double a8() const { return 1.0 / I_zz_; }

    Eigen::Matrix3d matrix() const { return Eigen::Vector3d(I_xx_, I_yy_, I_zz_).asDiagonal(); }

private:
    InertiaParams(double I_xx, double I_yy, double I_zz, double J_r, double l)
        : I_xx_(I_xx), I_yy_(I_yy), I_zz_(I_zz), J_r_(J_r), l_(l) {}

    double I_xx_, I_yy_, I_zz_, J_r_, l_;
};

/// Cylinder (airframe) and cuboid (arm) dimensions.
struct GeometryParams {
    double R_q = 0.0, L_q = 0.0;
    double L_r = 0.0, W_r = 0.0, H_r = 0.0, D_r = 0.0;

    void validate() const {
        for (double v : {R_q, L_q, L_r, W_r, H_r, D_r})
            if (!(v > 0.0)) throw InvalidParameter("geometry dimensions must be positive");
    }
};

/// Principal inertias of the airframe alone (two crossed cylinders).
inline Eigen::Vector3d airframe_inertia(const GeometryParams& g, double m_q) {
    const double R2 = g.R_q * g.R_q, L2 = g.L_q * g.L_q;
    const double Ixy = m_q * (R2 / 4.0 + L2 / 12.0 + R2 / 2.0);
    const double Iz = m_q * (R2 / 4.0 + L2 / 12.0 + R2 / 4.0 + L2 / 12.0);
    return {Ixy, Ixy, Iz};
}

/// Principal inertias of the arm cuboid about the airframe axes.
inline Eigen::Vector3d arm_inertia(const GeometryParams& g, double m_r) {
    const double L2 = g.L_r * g.L_r, W2 = g.W_r * g.W_r, H2 = g.H_r * g.H_r, D2 = g.D_r * g.D_r;
    return {m_r * (W2 / 12.0 + H2 / 12.0 + D2), m_r * (L2 / 12.0 + H2 / 12.0 + D2), m_r * (L2 / 2.0 + W2 / 2.0)};
}

/// Adds airframe and arm inertias; J_r and l pass through to the a-coefficients.
inline InertiaParams compose_inertia(const GeometryParams& geometry, const MassProperties& masses, double J_r,
                                     double l) {
    geometry.validate();
    masses.validate();
    const Eigen::Vector3d I = airframe_inertia(geometry, masses.m_q) + arm_inertia(geometry, masses.m_r);
    return InertiaParams::make(I[0], I[1], I[2], J_r, l);
}

struct MixerParams {
    double k_f = 1e-5;    ///< N s^2/rad^2
    double k_m = 1.5e-6;  ///< N m s^2/rad^2

    void validate() const {
        if (!(k_f > 0.0) || !(k_m > 0.0)) throw InvalidParameter("k_f and k_m must be positive");
    }
};

/// Thrust/torque commands and the rotor speeds that realise them.
struct ControlInputs {
    double U1 = 0.0, U2 = 0.0, U3 = 0.0, U4 = 0.0;
    std::array<double, 4> omega{};
    double omega_r = 0.0;

    Eigen::Vector4d generalized() const { return {U1, U2, U3, U4}; }
};

inline double relative_rotor_speed(const std::array<double, 4>& omega) {
    return -omega[0] + omega[1] - omega[2] + omega[3];
}

/// Result of inverse allocation. Negative squared speeds are clamped to 0.
struct UnmixResult {
    Eigen::Vector4d omega_squared = Eigen::Vector4d::Zero();
    bool saturated = false;
};

/// Linear map between squared rotor speeds and (U1, U2, U3, U4).
class Mixer {
public:
    explicit Mixer(const MixerParams& p = {}) : params_(p) {
        p.validate();
        const double f = p.k_f, m = p.k_m;
        // clang-format off
        forward_ << f,  f,  f,  f,
                    0, -f,  0,  f,
                    f,  0, -f,  0,
                    m, -m,  m, -m;
        // clang-format on
        Eigen::FullPivLU<Eigen::Matrix4d> lu(forward_);
        if (!lu.isInvertible()) throw ConfigError("allocation matrix is singular");
        inverse_ = lu.inverse();
    }

    const Eigen::Matrix4d& forward() const { return forward_; }
    const Eigen::Matrix4d& inverse() const { return inverse_; }
    const MixerParams& params() const { return params_; }

    ControlInputs mix(const Eigen::Vector4d& omega_squared) const {
        for (int i = 0; i < 4; ++i)
            if (!(omega_squared[i] >= 0.0)) throw InvalidInput("squared rotor speeds must be non-negative");
        const Eigen::Vector4d u = forward_ * omega_squared;
        ControlInputs out{u[0], u[1], u[2], u[3], {}, 0.0};
        for (int i = 0; i < 4; ++i) out.omega[i] = std::sqrt(omega_squared[i]);
        out.omega_r = relative_rotor_speed(out.omega);
        return out;
    }

    UnmixResult unmix(const Eigen::Vector4d& u) const {
        UnmixResult r;
        r.omega_squared = inverse_ * u;
        for (int i = 0; i < 4; ++i) {
            if (r.omega_squared[i] < 0.0) {
                r.omega_squared[i] = 0.0;
                r.saturated = true;
            }
        }
        return r;
    }

    /// Fills omega and omega_r of `u` from its U1..U4; returns the saturation flag.
    bool allocate(ControlInputs& u) const {
        const UnmixResult r = unmix(u.generalized());
        for (int i = 0; i < 4; ++i) u.omega[i] = std::sqrt(r.omega_squared[i]);
        u.omega_r = relative_rotor_speed(u.omega);
        return r.saturated;
    }

private:
    MixerParams params_;
    Eigen::Matrix4d forward_;
    Eigen::Matrix4d inverse_;
};

inline ControlInputs mix(const Eigen::Vector4d& omega_squared, const MixerParams& params) {
    return Mixer(params).mix(omega_squared);
}

inline UnmixResult unmix(const Eigen::Vector4d& u, const MixerParams& params) { return Mixer(params).unmix(u); }

/// Every physical constant the plant needs.
struct QuadParams {
    MassProperties mass;
    InertiaParams inertia = InertiaParams::table();
    MixerParams mixer;
    DisturbanceParams disturbances;
    double g = 9.81;

    double m() const { return mass.total(); }
    double z_G() const { return com_shift(mass); }

    void validate() const {
        mass.validate();
        mixer.validate();
        disturbances.validate();
        if (!(g > 0.0)) throw InvalidParameter("g must be positive");
    }
};

struct StateDerivative {
    QuadState::Vector dx = QuadState::Vector::Zero();
    /// (x2', x4', x6', x8', x10', x12') for the lag record.
    std::array<double, 6> accel{};
};

/// Extended plant dynamics. Pure function of its arguments.
inline StateDerivative state_derivative(const QuadState& s, const ControlInputs& u, const DisturbanceOutputs& d,
                                        const QuadParams& p) {
    const InertiaParams& I = p.inertia;
    const double m = p.m();
    const double x2 = s.phi_dot, x4 = s.theta_dot, x6 = s.psi_dot;
    const double c1 = std::cos(s.phi), s1 = std::sin(s.phi);
    const double c3 = std::cos(s.theta), s3 = std::sin(s.theta);
    const double c5 = std::cos(s.psi), s5 = std::sin(s.psi);
    const double Or = u.omega_r;

    StateDerivative out;
    auto& a = out.accel;
    a[0] = u.U2 * I.a6() - I.a2() * x4 * Or + I.a1() * x4 * x6 + d.delta[0];
    a[1] = u.U3 * I.a7() + I.a4() * x2 * Or + I.a3() * x2 * x6 + d.delta[1];
    a[2] = u.U4 * I.a8() + I.a5() * x2 * x4 + d.delta[2];
    a[3] = p.g - d.G * (u.U1 / m) * (c3 * c1) + d.delta[3];
    a[4] = -(u.U1 / m) * (s1 * s5 + s3 * c1 * c5) + d.delta[4];
    a[5] = -(u.U1 / m) * (c1 * s3 * s5 - s1 * c5) + d.delta[5];

    const auto v = s.rates();
    for (int i = 0; i < 6; ++i) {
        out.dx[2 * i] = v[i];
        out.dx[2 * i + 1] = a[i];
    }
    return out;
}

}  // namespace qmadrc
