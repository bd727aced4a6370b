#pragma once

// Simulation-in-the-loop gain tuning: signal-bound constraints, an
// integrated tracking/estimation/effort cost, and a projected
// finite-difference gradient descent with backtracking.

#include <algorithm>
#include <cmath>
#include <functional>
#include <future>
#include <limits>
#include <string>
#include <vector>

#include "adrc.hpp"
#include "errors.hpp"
#include "model.hpp"
#include "sim.hpp"

namespace qmadrc {

inline constexpr double kDivergenceCost = 1e12;

// ---------------------------------------------------------------------------
// Generic optimizer

struct TuneOptions {
    int max_iterations = 50;
    double initial_step = 0.1;  ///< in box-normalised units
    double shrink = 0.5;
    double grow = 2.0;
    int max_backtracks = 30;
    double armijo = 1e-4;
    double fd_rel_eps = 1e-4;
    double fd_floor = 1e-6;
    double tolerance = 1e-6;  ///< stop when relative cost improvement falls below this
    bool parallel = true;
};

struct IterationRecord {
    int iteration = 0;
    double cost = 0.0;
    double step = 0.0;
    std::vector<double> x;
};

struct OptimizeResult {
    std::vector<double> x;
    double cost = 0.0;
    std::vector<IterationRecord> history;
    std::string stop_reason;
    int evaluations = 0;
};

struct Box {
    std::vector<double> lower;
    std::vector<double> upper;

    std::size_t size() const { return lower.size(); }

    void validate() const {
        if (lower.size() != upper.size()) throw InvalidParameter("box bounds size mismatch");
        for (std::size_t i = 0; i < lower.size(); ++i)
            if (!(lower[i] < upper[i])) throw InvalidParameter("box lower bound must be below upper bound");
    }

    bool contains(const std::vector<double>& x) const {
        if (x.size() != lower.size()) return false;
        for (std::size_t i = 0; i < x.size(); ++i)
            if (!(x[i] >= lower[i] && x[i] <= upper[i])) return false;
        return true;
    }

    std::vector<double> project(std::vector<double> x) const {
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i], lower[i], upper[i]);
        return x;
    }
};

/// Central-difference gradient; probes are clipped to the box and the
/// quotient uses the actual probe spacing.
template <typename CostFn>
std::vector<double> fd_gradient(CostFn& cost, const std::vector<double>& x, const Box& box, const TuneOptions& opt,
                                int& evaluations) {
    const std::size_t n = x.size();
    std::vector<std::vector<double>> probes;
    std::vector<double> spacing(n);
    probes.reserve(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        const double h = std::max(opt.fd_rel_eps * std::abs(x[i]), opt.fd_floor);
        auto plus = x, minus = x;
        plus[i] = std::min(x[i] + h, box.upper[i]);
        minus[i] = std::max(x[i] - h, box.lower[i]);
        spacing[i] = plus[i] - minus[i];
        probes.push_back(std::move(plus));
        probes.push_back(std::move(minus));
    }

    std::vector<double> values(probes.size());
    if (opt.parallel) {
        std::vector<std::future<double>> jobs;
        jobs.reserve(probes.size());
        for (const auto& p : probes) jobs.push_back(std::async(std::launch::async, [&cost, &p] { return cost(p); }));
        for (std::size_t j = 0; j < jobs.size(); ++j) values[j] = jobs[j].get();
    } else {
        for (std::size_t j = 0; j < probes.size(); ++j) values[j] = cost(probes[j]);
    }
    evaluations += static_cast<int>(probes.size());

    std::vector<double> g(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        if (spacing[i] > 0.0) g[i] = (values[2 * i] - values[2 * i + 1]) / spacing[i];
    return g;
}

/// Projected gradient descent in box-normalised coordinates.
///
/// The search direction is the normalised gradient scaled per coordinate by
/// the box width; a trial point is projected onto the box and accepted under
/// an Armijo condition, otherwise the step shrinks. Accepted costs never
/// increase.
template <typename CostFn>
OptimizeResult minimize_box(CostFn cost, std::vector<double> x0, const Box& box, const TuneOptions& opt = {}) {
    box.validate();
    if (!box.contains(x0)) throw InvalidParameter("initial vector lies outside the box bounds");

    OptimizeResult res;
    res.x = std::move(x0);
    res.cost = cost(res.x);
    res.evaluations = 1;
    res.history.push_back({0, res.cost, 0.0, res.x});
    res.stop_reason = "max_iterations";

    const std::size_t n = res.x.size();
    std::vector<double> scale(n);
    for (std::size_t i = 0; i < n; ++i) scale[i] = box.upper[i] - box.lower[i];

    double step = opt.initial_step;
    for (int it = 1; it <= opt.max_iterations; ++it) {
        const auto g = fd_gradient(cost, res.x, box, opt, res.evaluations);

        double norm = 0.0;
        for (std::size_t i = 0; i < n; ++i) norm += (g[i] * scale[i]) * (g[i] * scale[i]);
        norm = std::sqrt(norm);
        if (!(norm > 0.0) || !std::isfinite(norm)) {
            res.stop_reason = "zero_gradient";
            break;
        }

        bool accepted = false;
        for (int bt = 0; bt <= opt.max_backtracks; ++bt) {
            std::vector<double> trial(n);
            for (std::size_t i = 0; i < n; ++i) trial[i] = res.x[i] - step * scale[i] * (g[i] * scale[i]) / norm;
            trial = box.project(std::move(trial));

            double decrease = 0.0;  // g . (x - trial)
            for (std::size_t i = 0; i < n; ++i) decrease += g[i] * (res.x[i] - trial[i]);
            if (!(decrease > 0.0)) {
                step *= opt.shrink;
                continue;
            }
            const double c = cost(trial);
            ++res.evaluations;
            if (c <= res.cost - opt.armijo * decrease) {
                const double improvement = (res.cost - c) / std::max(std::abs(res.cost), 1e-300);
                res.x = std::move(trial);
                res.cost = c;
                res.history.push_back({it, c, step, res.x});
                accepted = true;
                step = std::min(step * opt.grow, 1.0);
                if (improvement < opt.tolerance) res.stop_reason = "converged";
                break;
            }
            step *= opt.shrink;
        }
        if (!accepted) {
            res.stop_reason = "line_search";
            break;
        }
        if (res.stop_reason == "converged") break;
    }
    return res;
}

// ---------------------------------------------------------------------------
// Gain layout

/// Decision-vector layout. Shared: p1 p2 p3 then (kp, kd) for roll, pitch,
/// yaw, altitude (11 entries). PerSubsystem: (p1 p2 p3 kp kd) per channel (20).
enum class GainLayout { shared, per_subsystem };

inline std::size_t layout_size(GainLayout l) { return l == GainLayout::shared ? 11 : 20; }

inline std::vector<double> encode_gains(const ControllerSet& c, GainLayout layout) {
    std::vector<double> v;
    if (layout == GainLayout::shared) {
        const EsoGains& e = c[Subsystem::roll].eso;
        v = {e.p1(), e.p2(), e.p3()};
        for (auto s : kSubsystems) v.insert(v.end(), {c[s].pd.kp, c[s].pd.kd});
    } else {
        for (auto s : kSubsystems) v.insert(v.end(), {c[s].eso.p1(), c[s].eso.p2(), c[s].eso.p3(), c[s].pd.kp, c[s].pd.kd});
    }
    return v;
}

/// Sum of Hurwitz shortfalls max(0, p3 - p1 p2) over the observer blocks.
inline double hurwitz_violation(const std::vector<double>& v, GainLayout layout) {
    auto one = [](double p1, double p2, double p3) {
        double s = std::max(0.0, p3 - p1 * p2);
        s += std::max(0.0, -p1) + std::max(0.0, -p3);
        if (!is_hurwitz(p1, p2, p3) && s == 0.0) s = std::numeric_limits<double>::min();
        return s;
    };
    if (layout == GainLayout::shared) return one(v[0], v[1], v[2]);
    double s = 0.0;
    for (std::size_t k = 0; k < 4; ++k) s += one(v[5 * k], v[5 * k + 1], v[5 * k + 2]);
    return s;
}

/// Writes the vector into a copy of `base`. Throws ConfigError on non-Hurwitz blocks.
inline ControllerSet decode_gains(const std::vector<double>& v, GainLayout layout, const ControllerSet& base) {
    if (v.size() != layout_size(layout)) throw InvalidParameter("gain vector has the wrong length");
    ControllerSet c = base;
    if (layout == GainLayout::shared) {
        const EsoGains e(v[0], v[1], v[2]);
        std::size_t k = 3;
        for (auto s : kSubsystems) {
            c[s].eso = e;
            c[s].pd = {v[k], v[k + 1]};
            k += 2;
        }
    } else {
        std::size_t k = 0;
        for (auto s : kSubsystems) {
            c[s].eso = EsoGains(v[k], v[k + 1], v[k + 2]);
            c[s].pd = {v[k + 3], v[k + 4]};
            k += 5;
        }
    }
    return c;
}

/// Default search box: p1 in [1, 300], p2, p3 in [1, 1e5], kp in [0.1, 500], kd in [0.1, 200].
inline Box default_gain_box(GainLayout layout) {
    Box b;
    auto eso = [&] {
        b.lower.insert(b.lower.end(), {1.0, 1.0, 1.0});
        b.upper.insert(b.upper.end(), {300.0, 1e5, 1e5});
    };
    auto pd = [&] {
        b.lower.insert(b.lower.end(), {0.1, 0.1});
        b.upper.insert(b.upper.end(), {500.0, 200.0});
    };
    if (layout == GainLayout::shared) {
        eso();
        for (int i = 0; i < 4; ++i) pd();
    } else {
        for (int i = 0; i < 4; ++i) {
            eso();
            pd();
        }
    }
    return b;
}

// ---------------------------------------------------------------------------
// Signal bounds and cost

struct BoundSegment {
    double t_start = 0.0;
    double t_end = 0.0;
    double lower = -std::numeric_limits<double>::infinity();
    double upper = std::numeric_limits<double>::infinity();
};

/// Envelope on one trace column (named as in the CSV header).
struct SignalBound {
    std::string signal;
    std::vector<BoundSegment> segments;

    void validate() const {
        const auto cols = TraceLog::columns();
        if (std::find(cols.begin(), cols.end(), signal) == cols.end())
            throw InvalidParameter("signal bound references unknown signal '" + signal + "'");
        for (std::size_t i = 0; i < segments.size(); ++i) {
            const auto& s = segments[i];
            if (!(s.t_start <= s.t_end)) throw InvalidParameter("bound segment for '" + signal + "' has t_end < t_start");
            if (!(s.lower <= s.upper)) throw InvalidParameter("bound segment for '" + signal + "' has lower > upper");
            for (std::size_t j = 0; j < i; ++j) {
                const auto& o = segments[j];
                if (s.t_start < o.t_end && o.t_start < s.t_end)
                    throw InvalidParameter("bound segments for '" + signal + "' overlap");
            }
        }
    }
};

/// Overshoot and settling envelopes around the scenario's final references:
/// before the settle time the output may sit anywhere between its start
/// value and a small overshoot; afterwards it must stay in a band.
inline std::vector<SignalBound> default_bounds(const Scenario& sc) {
    const double T = sc.duration;
    const double settle = std::min(6.0, T);
    std::vector<SignalBound> b;
    auto envelope = [&](const char* name, double start, double ref, double margin) {
        b.push_back({name, {{0.0, settle, std::min(start, ref) - margin, std::max(start, ref) + margin},
                            {settle, T, ref - margin, ref + margin}}});
    };
    envelope("altitude", sc.initial.altitude(), sc.altitude_ref.value(T), 0.5);
    envelope("phi", sc.initial.phi, sc.roll_ref.value(T), deg2rad(1.0));
    envelope("theta", sc.initial.theta, sc.pitch_ref.value(T), deg2rad(1.0));
    envelope("psi", sc.initial.psi, sc.yaw_ref.value(T), deg2rad(1.0));
    b.push_back({"u_alt", {{0.0, T, 0.0, 40.0}}});
    return b;
}

struct CostWeights {
    double tracking = 1.0;
    double estimation = 1.0;
    double effort = 0.01;

    void validate() const {
        if (!(tracking >= 0.0 && estimation >= 0.0 && effort >= 0.0))
            throw InvalidParameter("cost weights must be non-negative");
    }
};

struct TuneProblem {
    GainLayout layout = GainLayout::shared;
    ControllerSet base = ControllerSet::table();  ///< limits and anything not in the vector
    Box box = default_gain_box(GainLayout::shared);
    Scenario scenario = Scenario::standard();
    QuadParams params;
    std::vector<SignalBound> bounds = default_bounds(Scenario::standard());
    CostWeights weights;
    double bound_penalty = 1e3;
    double hurwitz_penalty = 1e6;

    void validate() const {
        box.validate();
        if (box.size() != layout_size(layout)) throw InvalidParameter("box size does not match the gain layout");
        weights.validate();
        if (!(bound_penalty >= 0.0) || !(hurwitz_penalty >= 0.0)) throw InvalidParameter("penalties must be non-negative");
        for (const auto& b : bounds) b.validate();
        scenario.validate();
    }
};

struct BoundViolation {
    std::string signal;
    std::size_t segment = 0;
    double integrated_excess = 0.0;
    double max_excess = 0.0;
};

struct CostReport {
    double cost = 0.0;
    double tracking = 0.0;
    double estimation = 0.0;
    double effort = 0.0;
    double penalty = 0.0;
    bool diverged = false;
    bool hurwitz_violated = false;
    std::vector<BoundViolation> bounds;  ///< one entry per segment

    bool any_violation() const {
        for (const auto& b : bounds)
            if (b.integrated_excess > 0.0 || b.max_excess > 0.0) return true;
        return false;
    }
};

/// One simulation scored by integrated squared tracking error, squared
/// disturbance-estimation error, squared control, and bound excess.
inline CostReport evaluate_cost(const std::vector<double>& v, const TuneProblem& prob) {
    if (!prob.box.contains(v)) throw InvalidParameter("cost: vector lies outside the box bounds");
    CostReport rep;

    const double hv = hurwitz_violation(v, prob.layout);
    if (hv > 0.0) {
        rep.hurwitz_violated = true;
        rep.penalty = prob.hurwitz_penalty * hv;
        rep.cost = kDivergenceCost + rep.penalty;
        return rep;
    }

    TraceLog trace;
    try {
        trace = run(prob.scenario, prob.params, decode_gains(v, prob.layout, prob.base));
    } catch (const DivergenceError&) {
        rep.diverged = true;
    } catch (const IntegrationFailure&) {
        rep.diverged = true;
    }
    if (rep.diverged) {
        rep.cost = kDivergenceCost;
        return rep;
    }

    const double dt = trace.dt;
    const EstimationSeries est = estimation_oracle(trace, prob.params);
    for (std::size_t k = 0; k < trace.size(); ++k) {
        const TraceRecord& r = trace.records[k];
        const std::array<double, 4> out{r.state.phi, r.state.theta, r.state.psi, r.state.altitude()};
        for (std::size_t i = 0; i < 4; ++i) {
            const double et = r.ref[i] - out[i];
            const double ee = est.f_hat[i][k] - est.f_true[i][k];
            rep.tracking += et * et * dt;
            rep.estimation += ee * ee * dt;
            rep.effort += r.ctrl[i].u * r.ctrl[i].u * dt;
        }
    }

    if (!prob.bounds.empty()) {
        const auto cols = TraceLog::columns();
        std::vector<std::size_t> col(prob.bounds.size());
        for (std::size_t b = 0; b < prob.bounds.size(); ++b) {
            col[b] = static_cast<std::size_t>(std::find(cols.begin(), cols.end(), prob.bounds[b].signal) - cols.begin());
            for (std::size_t s = 0; s < prob.bounds[b].segments.size(); ++s) rep.bounds.push_back({prob.bounds[b].signal, s});
        }
        for (const auto& r : trace.records) {
            const auto row = TraceLog::row(r);
            std::size_t slot = 0;
            for (std::size_t b = 0; b < prob.bounds.size(); ++b) {
                for (const auto& seg : prob.bounds[b].segments) {
                    BoundViolation& bv = rep.bounds[slot++];
                    if (r.t < seg.t_start || r.t > seg.t_end) continue;
                    const double val = row[col[b]];
                    const double excess = std::max({0.0, val - seg.upper, seg.lower - val});
                    bv.integrated_excess += excess * dt;
                    bv.max_excess = std::max(bv.max_excess, excess);
                }
            }
        }
        for (const auto& bv : rep.bounds) rep.penalty += prob.bound_penalty * bv.integrated_excess;
    }

    rep.cost = prob.weights.tracking * rep.tracking + prob.weights.estimation * rep.estimation +
               prob.weights.effort * rep.effort + rep.penalty;
    return rep;
}

inline double cost(const std::vector<double>& v, const TuneProblem& prob) { return evaluate_cost(v, prob).cost; }

struct TuneResult {
    std::vector<double> x;
    double cost = 0.0;
    CostReport report;
    std::vector<IterationRecord> history;
    std::string stop_reason;
    int evaluations = 0;
};

/// Tunes the gain vector on the problem's scenario.
inline TuneResult tune(const TuneProblem& prob, const std::vector<double>& x0, const TuneOptions& opt = {}) {
    prob.validate();
    if (x0.size() != layout_size(prob.layout)) throw InvalidParameter("initial vector has the wrong length");
    if (!prob.box.contains(x0)) throw InvalidParameter("infeasible initial vector: outside the box bounds");
    if (hurwitz_violation(x0, prob.layout) > 0.0)
        throw InvalidParameter("infeasible initial vector: observer gains are not Hurwitz");

    OptimizeResult o = minimize_box([&prob](const std::vector<double>& v) { return cost(v, prob); }, x0, prob.box, opt);
    TuneResult r;
    r.report = evaluate_cost(o.x, prob);
    r.x = std::move(o.x);
    r.cost = r.report.cost;
    r.history = std::move(o.history);
    r.stop_reason = std::move(o.stop_reason);
    r.evaluations = o.evaluations + 1;
    return r;
}

}  // namespace qmadrc
