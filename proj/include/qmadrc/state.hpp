#pragma once

#include <array>
#include <cmath>
#include <cstddef>

#include <Eigen/Core>

namespace qmadrc {

/// 12-element flight state.
///
/// Index layout follows the model's state vector: angles and positions at
/// odd positions x1, x3, ..., x11 and their rates at the even positions
/// x2, x4, ..., x12. z is positive downward (gravity enters its
/// acceleration with a plus sign); altitude above ground is -z.
struct QuadState {
    double phi = 0.0, phi_dot = 0.0;
    double theta = 0.0, theta_dot = 0.0;
    double psi = 0.0, psi_dot = 0.0;
    double z = 0.0, z_dot = 0.0;
    double x = 0.0, x_dot = 0.0;
    double y = 0.0, y_dot = 0.0;

    /// Accelerations (x2', x4', x6', x8', x10', x12') from the previous
    /// integration step. Breaks the algebraic loop of the CoM coupling terms.
    std::array<double, 6> lagged_accel{};

    using Vector = Eigen::Matrix<double, 12, 1>;

    Vector vector() const {
        Vector v;
        v << phi, phi_dot, theta, theta_dot, psi, psi_dot, z, z_dot, x, x_dot, y, y_dot;
        return v;
    }

    /// Copies the 12 kinematic entries; lagged_accel is left untouched.
    void assign(const Vector& v) {
        phi = v[0];
        phi_dot = v[1];
        theta = v[2];
        theta_dot = v[3];
        psi = v[4];
        psi_dot = v[5];
        z = v[6];
        z_dot = v[7];
        x = v[8];
        x_dot = v[9];
        y = v[10];
        y_dot = v[11];
    }

    static QuadState from_vector(const Vector& v, const std::array<double, 6>& lagged = {}) {
        QuadState s;
        s.assign(v);
        s.lagged_accel = lagged;
        return s;
    }

    double altitude() const { return -z; }

    /// Rates in model order (x2, x4, x6, x8, x10, x12).
    std::array<double, 6> rates() const { return {phi_dot, theta_dot, psi_dot, z_dot, x_dot, y_dot}; }

    bool finite() const {
        if (!vector().allFinite()) return false;
        for (double a : lagged_accel)
            if (!std::isfinite(a)) return false;
        return true;
    }
};

/// Indices into QuadState::lagged_accel / QuadState::rates().
namespace axis {
inline constexpr std::size_t roll = 0;
inline constexpr std::size_t pitch = 1;
inline constexpr std::size_t yaw = 2;
inline constexpr std::size_t heave = 3;
inline constexpr std::size_t surge = 4;
inline constexpr std::size_t sway = 5;
}  // namespace axis

}  // namespace qmadrc
