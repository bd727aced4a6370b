#pragma once

// Fixed-step closed-loop simulation of the plant with four ADRC channels,
// plus trace logging and the disturbance-estimation oracle.

#include <array>
#include <charconv>
#include <cmath>
#include <numbers>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "adrc.hpp"
#include "disturbances.hpp"
#include "errors.hpp"
#include "integrator.hpp"
#include "model.hpp"
#include "state.hpp"

namespace qmadrc {

inline constexpr double kDivergenceThreshold = 1e6;

inline double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / std::numbers::pi; }

/// Piecewise-constant signal: value of the last step whose start time is <= t.
class StepProfile {
public:
    StepProfile() = default;
    explicit StepProfile(double constant) : steps_{{0.0, constant}} {}
    explicit StepProfile(std::vector<std::pair<double, double>> steps) : steps_(std::move(steps)) {
        for (std::size_t i = 0; i < steps_.size(); ++i) {
            if (!std::isfinite(steps_[i].first) || !std::isfinite(steps_[i].second))
                throw InvalidParameter("profile entries must be finite");
            if (i > 0 && !(steps_[i].first > steps_[i - 1].first))
                throw InvalidParameter("profile step times must be strictly increasing");
        }
    }

    bool empty() const { return steps_.empty(); }
    const std::vector<std::pair<double, double>>& steps() const { return steps_; }

    double value(double t, double fallback = 0.0) const {
        double v = fallback;
        for (const auto& [start, val] : steps_) {
            if (start <= t) v = val;
            else break;
        }
        return v;
    }

    /// Steps are flat between switches.
    double rate(double) const { return 0.0; }

private:
    std::vector<std::pair<double, double>> steps_;
};

struct Scenario {
    double duration = 10.0;  ///< s
    double dt = 1e-3;        ///< s
    QuadState initial;
    StepProfile roll_ref{0.0};      ///< rad
    StepProfile pitch_ref{0.0};     ///< rad
    StepProfile yaw_ref{0.0};       ///< rad
    StepProfile altitude_ref{0.0};  ///< m, positive up
    DisturbanceFlags disturbances = DisturbanceFlags::all();
    /// Manipulator CoM distance over time; empty means the mass-property default.
    StepProfile d1;
    bool open_loop = false;
    /// Inputs held constant when open_loop is set.
    ControlInputs open_loop_input;

    std::size_t steps() const { return static_cast<std::size_t>(std::llround(duration / dt)); }

    void validate() const {
        if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidParameter("scenario dt must be positive");
        if (!(duration >= 0.0) || !std::isfinite(duration))
            throw InvalidParameter("scenario duration must be non-negative");
        if (duration > 0.0 && duration < dt) throw InvalidParameter("scenario duration shorter than dt");
        if (!initial.finite()) throw InvalidParameter("initial state must be finite");
    }

    /// Steps to 5 deg roll/pitch/yaw and 5 m altitude from rest on the ground,
    /// every disturbance channel on.
    static Scenario standard() {
        Scenario s;
        s.roll_ref = StepProfile(deg2rad(5.0));
        s.pitch_ref = StepProfile(deg2rad(5.0));
        s.yaw_ref = StepProfile(deg2rad(5.0));
        s.altitude_ref = StepProfile(5.0);
        return s;
    }

    /// No controller: released at 5 m with thrust at 98% of hover, ground effect only.
    static Scenario open_loop_descent(const QuadParams& p, double thrust_fraction = 0.98) {
        Scenario s;
        s.initial.z = -5.0;
        s.disturbances = DisturbanceFlags{false, true, false, false};
        s.open_loop = true;
        s.open_loop_input.U1 = thrust_fraction * p.m() * p.g;
        return s;
    }

    /// Closed-loop descent from 5 m to a 0.3 m hold, ground effect only.
    static Scenario landing() {
        Scenario s;
        s.duration = 15.0;
        s.initial.z = -5.0;
        s.altitude_ref = StepProfile(0.3);
        s.disturbances = DisturbanceFlags{false, true, false, false};
        return s;
    }
};

/// Configuration for all four channels.
struct ControllerSet {
    std::array<SubsystemConfig, 4> channel;

    SubsystemConfig& operator[](Subsystem s) { return channel[static_cast<std::size_t>(s)]; }
    const SubsystemConfig& operator[](Subsystem s) const { return channel[static_cast<std::size_t>(s)]; }

    /// Tuned reference gains; thrust limited to [0, 40] N, torques to [-5, 5].
    static ControllerSet table() {
        ControllerSet c;
        c[Subsystem::roll] = {Subsystem::roll, EsoGains::table(), {90.3979, 19.6321}, {-5.0, 5.0}};
        c[Subsystem::pitch] = {Subsystem::pitch, EsoGains::table(), {79.3794, 21.1666}, {-5.0, 5.0}};
        c[Subsystem::yaw] = {Subsystem::yaw, EsoGains::table(), {69.8457, 16.8096}, {-5.0, 5.0}};
        c[Subsystem::altitude] = {Subsystem::altitude, EsoGains::table(), {10.5246, 9.5557}, {0.0, 40.0}};
        return c;
    }
};

struct TraceRecord {
    double t = 0.0;
    QuadState state;
    std::array<double, 4> ref{};  ///< roll, pitch, yaw (rad), altitude (m, up)
    std::array<AdrcDiagnostics, 4> ctrl{};
    std::array<EsoState, 4> eso{};
    ControlInputs u;
    DisturbanceOutputs dist;
    double z_G = 0.0;
    bool mixer_saturated = false;
};

/// Uniform-grid record of one run.
struct TraceLog {
    double dt = 0.0;
    std::vector<TraceRecord> records;

    std::size_t size() const { return records.size(); }

    static std::vector<std::string> columns() {
        std::vector<std::string> c = {"time",  "phi", "phi_dot", "theta", "theta_dot", "psi",   "psi_dot",
                                      "z",     "z_dot", "x",     "x_dot", "y",         "y_dot", "altitude"};
        for (auto s : kSubsystems) c.push_back("ref_" + std::string(to_string(s)));
        for (auto s : kSubsystems) {
            const std::string n(to_string(s));
            for (const char* f : {"u_", "u0_", "fhat_", "x1hat_", "x2hat_", "bhat_", "innov_", "sat_", "bdeg_"})
                c.push_back(f + n);
        }
        for (const char* f : {"altitude_hat", "omega1", "omega2", "omega3", "omega4", "omega_r", "mixer_sat", "G",
                              "delta_a", "delta_b", "delta_c", "delta_d", "delta_e", "delta_f", "z_G"})
            c.emplace_back(f);
        return c;
    }

    static std::vector<double> row(const TraceRecord& r) {
        std::vector<double> v;
        v.reserve(64);
        v.push_back(r.t);
        const auto sv = r.state.vector();
        for (int i = 0; i < 12; ++i) v.push_back(sv[i]);
        v.push_back(r.state.altitude());
        for (double x : r.ref) v.push_back(x);
        for (std::size_t i = 0; i < 4; ++i) {
            const auto& d = r.ctrl[i];
            v.insert(v.end(), {d.u, d.u0, d.f_hat, r.eso[i].x1_hat, r.eso[i].x2_hat, d.b_hat, d.innovation,
                               d.saturated ? 1.0 : 0.0, d.degenerate ? 1.0 : 0.0});
        }
        v.push_back(-r.eso[3].x1_hat);
        for (double w : r.u.omega) v.push_back(w);
        v.push_back(r.u.omega_r);
        v.push_back(r.mixer_saturated ? 1.0 : 0.0);
        v.push_back(r.dist.G);
        for (double d : r.dist.delta) v.push_back(d);
        v.push_back(r.z_G);
        return v;
    }

    /// Header row plus one comma-separated row per step, shortest round-trip doubles.
    void write_csv(std::ostream& os) const {
        const auto cols = columns();
        for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
        os << '\n';
        char buf[64];
        for (const auto& r : records) {
            const auto v = row(r);
            for (std::size_t i = 0; i < v.size(); ++i) {
                if (i) os << ',';
                auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v[i]);
                os.write(buf, end - buf);
            }
            os << '\n';
        }
    }
};

/// RK4 step of the plant; lagged_accel takes the last stage's accelerations.
template <typename DerivFn>
QuadState rk4_step(const QuadState& s, DerivFn&& deriv, double t, double dt) {
    if (!(dt > 0.0)) throw InvalidParameter("rk4_step: dt must be positive");
    StateDerivative last;
    auto f = [&](double tau, const QuadState::Vector& x) -> QuadState::Vector {
        last = deriv(tau, QuadState::from_vector(x, s.lagged_accel));
        if (!last.dx.allFinite()) throw IntegrationFailure("non-finite state derivative", tau);
        return last.dx;
    };
    const QuadState::Vector next = rk4(f, t, s.vector(), dt);
    return QuadState::from_vector(next, last.accel);
}

namespace detail {

inline std::size_t index(Subsystem s) { return static_cast<std::size_t>(s); }

/// Controlled output of each channel; altitude is controlled through z.
inline double measurement(const QuadState& s, Subsystem which) {
    switch (which) {
        case Subsystem::roll: return s.phi;
        case Subsystem::pitch: return s.theta;
        case Subsystem::yaw: return s.psi;
        case Subsystem::altitude: return s.z;
    }
    return 0.0;
}

inline void check_divergence(const QuadState& s, double t) {
    const auto v = s.vector();
    for (int i = 0; i < 12; ++i)
        if (!(std::abs(v[i]) <= kDivergenceThreshold))
            throw DivergenceError("state component " + std::to_string(i + 1) + " exceeded divergence threshold", t);
}

}  // namespace detail

/// Runs the scenario and records every step (duration/dt + 1 records).
inline TraceLog run(const Scenario& sc, const QuadParams& params_in, const ControllerSet& controllers) {
    sc.validate();
    QuadParams params = params_in;
    params.disturbances.enabled = sc.disturbances;
    params.validate();

    const Mixer mixer(params.mixer);
    const double m = params.m();
    const std::size_t n = sc.steps();
    const double dt = sc.dt;

    std::array<AdrcController, 4> ctl{AdrcController(controllers[Subsystem::roll]),
                                      AdrcController(controllers[Subsystem::pitch]),
                                      AdrcController(controllers[Subsystem::yaw]),
                                      AdrcController(controllers[Subsystem::altitude])};
    const std::array<double, 3> b_angle{params.inertia.a6(), params.inertia.a7(), params.inertia.a8()};

    TraceLog log;
    log.dt = dt;
    log.records.reserve(n + 1);

    QuadState x = sc.initial;
    for (auto s : kSubsystems) ctl[detail::index(s)].initialize(detail::measurement(x, s));

    for (std::size_t k = 0;; ++k) {
        const double t = static_cast<double>(k) * dt;

        MassProperties mass = params.mass;
        if (!sc.d1.empty()) mass.d1 = sc.d1.value(t, mass.d1);
        const double z_G = com_shift(mass);
        const DisturbanceOutputs dist = lump(x, t, params.disturbances, z_G, m);

        TraceRecord rec;
        rec.t = t;
        rec.state = x;
        rec.z_G = z_G;
        rec.dist = dist;
        rec.ref = {sc.roll_ref.value(t), sc.pitch_ref.value(t), sc.yaw_ref.value(t), sc.altitude_ref.value(t)};

        ControlInputs u;
        if (sc.open_loop) {
            u = sc.open_loop_input;
        } else {
            const std::array<double, 4> ref{rec.ref[0], rec.ref[1], rec.ref[2], -rec.ref[3]};
            const std::array<double, 4> ref_rate{sc.roll_ref.rate(t), sc.pitch_ref.rate(t), sc.yaw_ref.rate(t),
                                                 -sc.altitude_ref.rate(t)};
            for (auto s : kSubsystems) {
                const std::size_t i = detail::index(s);
                const double b = s == Subsystem::altitude
                                     ? b_hat_altitude(x.phi, x.theta, dist.G, m, controllers[s].b_min).value
                                     : b_angle[i];
                rec.ctrl[i] = ctl[i].step(detail::measurement(x, s), ref[i], ref_rate[i], b, dt);
                rec.eso[i] = ctl[i].eso();
            }
            u.U1 = rec.ctrl[3].u;
            u.U2 = rec.ctrl[0].u;
            u.U3 = rec.ctrl[1].u;
            u.U4 = rec.ctrl[2].u;
        }
        rec.mixer_saturated = mixer.allocate(u);
        rec.u = u;
        log.records.push_back(rec);

        if (k == n) break;

        auto deriv = [&](double tau, const QuadState& xs) {
            return state_derivative(xs, u, lump(xs, tau, params.disturbances, z_G, m), params);
        };
        x = rk4_step(x, deriv, t, dt);
        detail::check_divergence(x, t + dt);
    }
    return log;
}

/// True total disturbance per channel next to the observer's estimate.
struct EstimationSeries {
    std::vector<double> time;
    std::array<std::vector<double>, 4> f_true;
    std::array<std::vector<double>, 4> f_hat;

    /// RMS(f_hat - f_true) / RMS(f_true) over records with t >= t_from.
    double relative_rms_error(Subsystem s, double t_from) const {
        const std::size_t i = detail::index(s);
        double num = 0.0, den = 0.0;
        for (std::size_t k = 0; k < time.size(); ++k) {
            if (time[k] < t_from) continue;
            const double e = f_hat[i][k] - f_true[i][k];
            num += e * e;
            den += f_true[i][k] * f_true[i][k];
        }
        return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
    }
};

/// Rebuilds each channel's total disturbance from the logged states: its
/// acceleration row minus b_hat*u.
inline EstimationSeries estimation_oracle(const TraceLog& trace, const QuadParams& params) {
    EstimationSeries out;
    out.time.reserve(trace.size());
    for (auto& v : out.f_true) v.reserve(trace.size());
    for (auto& v : out.f_hat) v.reserve(trace.size());

    for (const auto& r : trace.records) {
        const StateDerivative d = state_derivative(r.state, r.u, r.dist, params);
        const std::array<double, 4> row{d.accel[axis::roll], d.accel[axis::pitch], d.accel[axis::yaw],
                                        d.accel[axis::heave]};
        out.time.push_back(r.t);
        for (std::size_t i = 0; i < 4; ++i) {
            out.f_true[i].push_back(row[i] - r.ctrl[i].b_hat * r.ctrl[i].u);
            out.f_hat[i].push_back(r.ctrl[i].f_hat);
        }
    }
    return out;
}

}  // namespace qmadrc
