#pragma once

#include <utility>

namespace qmadrc {

/// One classical fourth-order Runge-Kutta step of x' = f(t, x).
///
/// `Vec` needs vector addition and scalar multiplication (Eigen vectors,
/// plain doubles).
template <typename Vec, typename Fn>
Vec rk4(Fn&& f, double t, const Vec& x, double dt) {
    const Vec k1 = f(t, x);
    const Vec k2 = f(t + 0.5 * dt, Vec(x + (0.5 * dt) * k1));
    const Vec k3 = f(t + 0.5 * dt, Vec(x + (0.5 * dt) * k2));
    const Vec k4 = f(t + dt, Vec(x + dt * k3));
    return Vec(x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
}

}  // namespace qmadrc
