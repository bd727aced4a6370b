#include <gtest/gtest.h>

#include <complex>
#include <random>

#include <unsupported/Eigen/MatrixFunctions>

#include "qmadrc/adrc.hpp"

using namespace qmadrc;

namespace {

// Observer error e = x - x_hat for x'' = c, x_hat started at the true
// position with zero rate and disturbance: e' = A e, e(0) = (0, 0, c).
Eigen::Matrix3d error_matrix(const EsoGains& g) {
    Eigen::Matrix3d A;
    A << -g.p1(), 1, 0, -g.p2(), 0, 1, -g.p3(), 0, 0;
    return A;
}

Eigen::Vector3d error_oracle(const EsoGains& g, double c, double t) {
    const Eigen::Matrix3d At = error_matrix(g) * t;
    return At.exp() * Eigen::Vector3d(0, 0, c);
}

// Slowest decay rate of the observer error dynamics.
double slowest_rate(const EsoGains& g) {
    Eigen::EigenSolver<Eigen::Matrix3d> es(error_matrix(g));
    double r = 1e300;
    for (int i = 0; i < 3; ++i) r = std::min(r, -es.eigenvalues()[i].real());
    return r;
}

struct Benchmark {
    std::vector<double> t;
    std::vector<Eigen::Vector3d> err;  // x - x_hat per component
};

// Runs the observer against x'' = c from rest.
Benchmark constant_disturbance(const EsoGains& g, double c, double T, double dt) {
    Benchmark b;
    EsoState eso{};
    const auto steps = static_cast<long>(std::llround(T / dt));
    for (long k = 0; k <= steps; ++k) {
        const double t = k * dt;
        b.t.push_back(t);
        b.err.emplace_back(0.5 * c * t * t - eso.x1_hat, c * t - eso.x2_hat, c - eso.x3_hat);
        eso = eso_step(eso, 0.5 * c * t * t, 0.0, 1.0, g, dt);
    }
    return b;
}

double first_crossing(const Benchmark& b, double c, double frac) {
    for (std::size_t k = 0; k < b.t.size(); ++k)
        if (std::abs(b.err[k][2]) < frac * std::abs(c)) return b.t[k];
    return std::numeric_limits<double>::infinity();
}

}  // namespace

TEST(Hurwitz, TableGainsPass) {
    EXPECT_TRUE(is_hurwitz(29.5659, 2907, 3000));
    EXPECT_NEAR(29.5659 * 2907, 85948.1, 0.1);
    EXPECT_NO_THROW(EsoGains::table());
}

TEST(Hurwitz, ViolationsRejected) {
    EXPECT_THROW(EsoGains(0.0, 1.0, 1.0), ConfigError);
    EXPECT_THROW(EsoGains(1.0, 1.0, 0.0), ConfigError);
    EXPECT_THROW(EsoGains(1.0, 1.0, 1.0), ConfigError);
    EXPECT_THROW(EsoGains(-3.0, -3.0, 1.0), ConfigError);
    EXPECT_NO_THROW(EsoGains(1.0, 1.01, 1.0));
}

TEST(Hurwitz, RouthAgreesWithRoots) {
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> d(-5.0, 50.0);
    for (int i = 0; i < 500; ++i) {
        const double p1 = d(rng), p2 = d(rng) * 10, p3 = d(rng) * 10;
        Eigen::Matrix3d A;
        A << -p1, 1, 0, -p2, 0, 1, -p3, 0, 0;
        Eigen::EigenSolver<Eigen::Matrix3d> es(A);
        bool stable = true;
        for (int k = 0; k < 3; ++k) stable = stable && es.eigenvalues()[k].real() < -1e-9;
        bool boundary = false;
        for (int k = 0; k < 3; ++k) boundary = boundary || std::abs(es.eigenvalues()[k].real()) < 1e-6;
        if (!boundary) {
            EXPECT_EQ(is_hurwitz(p1, p2, p3), stable) << p1 << " " << p2 << " " << p3;
        }
    }
}

TEST(Eso, FixedPoint) {
    const EsoState s{0.7, 0.0, 0.0};
    const EsoState n = eso_step(s, 0.7, 0.0, 25.0, EsoGains::table(), 1e-3);
    EXPECT_EQ(n.x1_hat, 0.7);
    EXPECT_EQ(n.x2_hat, 0.0);
    EXPECT_EQ(n.x3_hat, 0.0);
}

TEST(Eso, RejectsNonPositiveStep) {
    EXPECT_THROW(eso_step(EsoState{}, 0, 0, 1, EsoGains::table(), 0.0), InvalidParameter);
}

TEST(Eso, ConstantDisturbanceMatchesClosedForm) {
    const EsoGains g = EsoGains::table();
    const double c = 2.0;
    const Benchmark b = constant_disturbance(g, c, 5.0, 1e-3);
    for (std::size_t k = 0; k < b.t.size(); k += 250) {
        const Eigen::Vector3d e = error_oracle(g, c, b.t[k]);
        // The measurement is held over each step while the true output moves
        // at c*t, so x1_hat trails by up to one step of that motion.
        EXPECT_NEAR(b.err[k][0], e[0], 1e-4 * c + 1e-3 * c * b.t[k]) << "t=" << b.t[k];
        EXPECT_NEAR(b.err[k][1], e[1], 1e-2 * c) << "t=" << b.t[k];
        EXPECT_NEAR(b.err[k][2], e[2], 1e-2 * c) << "t=" << b.t[k];
    }
    EXPECT_LT(std::abs(b.err.back()[2]), 0.01 * c);
}

TEST(Eso, ConvergesAfterTenSlowTimeConstants) {
    const double c = -3.0;
    for (const EsoGains& g : {EsoGains::table(), EsoGains::from_bandwidth(20.0), EsoGains(60.0, 1100.0, 6000.0)}) {
        const double horizon = 10.0 / slowest_rate(g);
        const Benchmark b = constant_disturbance(g, c, horizon, 1e-3);
        const Eigen::Vector3d e = b.err.back();
        EXPECT_LT(std::abs(e[0]), 0.01 * std::abs(c)) << "p1=" << g.p1();
        EXPECT_LT(std::abs(e[1]), 0.01 * std::abs(c)) << "p1=" << g.p1();
        EXPECT_LT(std::abs(e[2]), 0.01 * std::abs(c)) << "p1=" << g.p1();
    }
}

TEST(Eso, SlowestPoleBoundsTheSettlingHorizon) {
    // The pole magnitudes sum to p1, so 10/p1 s is always too short for a
    // 1% error bound; the test above therefore uses the slowest pole.
    for (const EsoGains& g : {EsoGains::table(), EsoGains::from_bandwidth(20.0)})
        EXPECT_LE(slowest_rate(g), g.p1() / 3.0 + 1e-9);
}

TEST(Eso, DoublingBandwidthConvergesFaster) {
    const double c = 1.5;
    for (const EsoGains& g : {EsoGains::table(), EsoGains::from_bandwidth(10.0)}) {
        const double slow = first_crossing(constant_disturbance(g, c, 20.0, 1e-3), c, 0.05);
        const double fast = first_crossing(constant_disturbance(g.scaled(2.0), c, 20.0, 1e-3), c, 0.05);
        ASSERT_TRUE(std::isfinite(slow));
        EXPECT_LT(fast, slow);
    }
}

TEST(Cancel, Examples) {
    const ControlLimits wide{-1e9, 1e9};
    EXPECT_DOUBLE_EQ(cancel(3.2, 0.0, 1.0, wide).u, 3.2);
    EXPECT_NEAR(cancel(0.0, 9.81, -0.5, ControlLimits{0.0, 40.0}).u, 19.62, 1e-12);
    EXPECT_DOUBLE_EQ(cancel(1.0, 0.5, 0.25, wide).u, 2.0);
}

TEST(Cancel, SaturatesAndFlags) {
    const CancelResult r = cancel(10.0, 0.0, 1.0, ControlLimits{});
    EXPECT_EQ(r.u, 5.0);
    EXPECT_TRUE(r.saturated);
    const CancelResult low = cancel(-10.0, 0.0, 1.0, ControlLimits{});
    EXPECT_EQ(low.u, -5.0);
    EXPECT_TRUE(low.saturated);
    EXPECT_FALSE(cancel(1.0, 0.0, 1.0, ControlLimits{}).saturated);
}

TEST(Cancel, ClampsDegenerateEffectiveness) {
    const CancelResult r = cancel(0.01, 0.0, 1e-6, ControlLimits{-1e9, 1e9});
    EXPECT_TRUE(r.degenerate);
    EXPECT_DOUBLE_EQ(r.u, 0.01 / kDefaultBMin);
    const CancelResult n = cancel(0.01, 0.0, -1e-6, ControlLimits{-1e9, 1e9});
    EXPECT_DOUBLE_EQ(n.u, -0.01 / kDefaultBMin);
    EXPECT_EQ(clamp_b_hat(0.0, kDefaultBMin), -kDefaultBMin);
}

TEST(Pd, Examples) {
    EXPECT_EQ(pd(1.0, 0.0, 1.0, 0.0, PdGains{90.3979, 19.6321}), 0.0);
    EXPECT_DOUBLE_EQ(pd(1.0, 0.0, 0.0, 0.0, PdGains{10.5246, 9.5557}), 10.5246);
    EXPECT_DOUBLE_EQ(pd(0.0, -1.0, 0.0, 0.0, PdGains{90.3979, 19.6321}), -19.6321);
}

TEST(Pd, Linear) {
    std::mt19937 rng(23);
    std::uniform_real_distribution<double> d(-10.0, 10.0);
    const PdGains g{79.3794, 21.1666};
    for (int i = 0; i < 200; ++i) {
        const double e = d(rng), ed = d(rng);
        // Powers of two keep the scaling exact in floating point.
        for (double a : {2.0, 0.5, -4.0}) EXPECT_EQ(pd(a * e, a * ed, 0.0, 0.0, g), a * pd(e, ed, 0.0, 0.0, g));
        const double a = d(rng);
        EXPECT_NEAR(pd(a * e, a * ed, 0.0, 0.0, g), a * pd(e, ed, 0.0, 0.0, g), 1e-12 * (1 + std::abs(a * e * 100)));
    }
}

TEST(BHatAltitude, Examples) {
    EXPECT_DOUBLE_EQ(b_hat_altitude(0, 0, 1.0, 2.0).value, -0.5);
    const BHat side = b_hat_altitude(std::numbers::pi / 2, 0.0, 1.0, 2.0);
    EXPECT_TRUE(side.degenerate);
    EXPECT_EQ(side.value, -kDefaultBMin);
    EXPECT_NEAR(b_hat_altitude(0, 0, 1.08463, 2.0).value, -0.54232, 1e-5);
    EXPECT_FALSE(b_hat_altitude(0.1, 0.1, 1.0, 2.0).degenerate);
}

TEST(Controller, EquilibriumFromZero) {
    for (Subsystem s : kSubsystems) {
        SubsystemConfig cfg;
        cfg.which = s;
        if (s == Subsystem::altitude) cfg.limits = {0.0, 40.0};
        AdrcController c(cfg);
        c.initialize(0.0);
        const double b = s == Subsystem::altitude ? -0.5 : 25.0;
        const AdrcDiagnostics d = c.step(0.0, 0.0, 0.0, b, 1e-3);
        EXPECT_EQ(d.u0, 0.0);
        EXPECT_EQ(d.f_hat, 0.0);
        EXPECT_EQ(d.u, cancel(0.0, 0.0, b, cfg.limits).u);
        EXPECT_EQ(d.u, 0.0);
    }
}

TEST(Controller, UsesPreviousInputInObserver) {
    SubsystemConfig cfg;
    ControllerState st{{0.0, 0.0, 0.0}, 2.0, 25.0};
    const AdrcStep s = adrc_controller_step(cfg, st, 0.0, 0.0, 0.0, 25.0, 1e-3);
    const EsoState expect = eso_step(st.eso, 0.0, 2.0, 25.0, cfg.eso, 1e-3);
    EXPECT_EQ(s.state.eso.x1_hat, expect.x1_hat);
    EXPECT_EQ(s.state.eso.x2_hat, expect.x2_hat);
    EXPECT_EQ(s.state.u_prev, s.diag.u);
    EXPECT_EQ(s.state.b_prev, 25.0);
}

TEST(Controller, CancellationWithTrueDisturbanceIsDoubleIntegrator) {
    const double b = 25.0, dt = 1e-3, ref = 0.3;
    const PdGains g{90.3979, 19.6321};
    const ControlLimits wide{-1e9, 1e9};
    auto f = [](double t) { return 2.0 + 3.0 * std::sin(1.7 * t); };
    using V = Eigen::Vector2d;
    auto plant = [&](double t, const V& x) -> V {
        const double u0 = pd(ref, 0.0, x[0], x[1], g);
        const double u = cancel(u0, f(t), b, wide).u;
        return {x[1], f(t) + b * u};
    };
    auto ideal = [&](double, const V& x) -> V { return {x[1], pd(ref, 0.0, x[0], x[1], g)}; };
    V a = V::Zero(), r = V::Zero();
    for (int k = 0; k < 5000; ++k) {
        a = rk4(plant, k * dt, a, dt);
        r = rk4(ideal, k * dt, r, dt);
        ASSERT_NEAR(a[0], r[0], 1e-12 * (1 + std::abs(r[0])));
        ASSERT_NEAR(a[1], r[1], 1e-12 * (1 + std::abs(r[1])));
    }
    EXPECT_NEAR(a[0], ref, 1e-6);
}

TEST(Controller, RejectsConstantDisturbanceInClosedLoop) {
    const double b = 25.0, d = 4.0, dt = 1e-3, ref = 0.1;
    SubsystemConfig cfg;
    cfg.pd = {90.3979, 19.6321};
    AdrcController c(cfg);
    c.initialize(0.0);
    Eigen::Vector2d x = Eigen::Vector2d::Zero();
    double u = 0.0, f_hat = 0.0;
    for (int k = 0; k < 10000; ++k) {
        const AdrcDiagnostics diag = c.step(x[0], ref, 0.0, b, dt);
        u = diag.u;
        f_hat = diag.f_hat;
        auto plant = [&](double, const Eigen::Vector2d& s) -> Eigen::Vector2d { return {s[1], d + b * u}; };
        x = rk4(plant, k * dt, x, dt);
    }
    EXPECT_NEAR(x[0], ref, 1e-4);
    EXPECT_NEAR(f_hat, d, 1e-2 * d);
}
