#pragma once

// JSON configuration: defaults for every field, schema checking with key
// paths in diagnostics, and builders for the runtime objects.
//
// The merged document is kept verbatim so values written back out (for
// example by the tuner) reload bit-identically.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "adrc.hpp"
#include "errors.hpp"
#include "model.hpp"
#include "sim.hpp"
#include "tuner.hpp"

namespace qmadrc {

using json = nlohmann::json;

/// Complete default document; `null` marks optional entries. Entries that
/// are null or polymorphic (drag.k, tuner.bounds) are type-checked when the
/// runtime objects are built.
inline const json& default_config() {
    static const json doc = json::parse(R"({
  "plant": {
    "mass": {"m_q": 1.8, "m_r": 0.2, "d0": 0.0, "d1": 0.8},
    "g": 9.81,
    "inertia": {
      "source": "table",
      "I_xx": 0.018, "I_yy": 0.018, "I_zz": 0.035, "J_r": 0.006, "l": 0.45,
      "geometry": null
    },
    "mixer": {"k_f": 1e-5, "k_m": 1.5e-6}
  },
  "disturbances": {
    "drag": {"enabled": null, "k": 0.3729},
    "ground_effect": {"enabled": null, "rho": 8.6, "r": 0.1905, "z_min": 0.2},
    "wind": {"enabled": null, "alpha": 0.1, "beta": 1.0, "n": 1.0, "channels": null},
    "com": {"enabled": null},
    "strict_paper_signs": true
  },
  "controller": {
    "eso": {"p1": 29.5659, "p2": 2907.0, "p3": 3000.0},
    "b_min": 0.05,
    "roll":     {"kp": 90.3979, "kd": 19.6321, "u_min": -5.0, "u_max": 5.0, "eso": null},
    "pitch":    {"kp": 79.3794, "kd": 21.1666, "u_min": -5.0, "u_max": 5.0, "eso": null},
    "yaw":      {"kp": 69.8457, "kd": 16.8096, "u_min": -5.0, "u_max": 5.0, "eso": null},
    "altitude": {"kp": 10.5246, "kd": 9.5557,  "u_min": 0.0,  "u_max": 40.0, "eso": null}
  },
  "scenario": {
    "preset": "standard",
    "duration": null,
    "dt": null,
    "initial": null,
    "references": null,
    "d1": null,
    "open_loop": null,
    "open_loop_input": null
  },
  "tuner": {
    "objective": "simulation",
    "layout": "shared",
    "initial": null,
    "max_iterations": 20,
    "initial_step": 0.1,
    "fd_epsilon": 1e-4,
    "fd_floor": 1e-6,
    "tolerance": 1e-6,
    "parallel": true,
    "weights": {"tracking": 1.0, "estimation": 1.0, "effort": 0.01},
    "bound_penalty": 1000.0,
    "bounds": "default",
    "box": null,
    "fixture": null
  },
  "tune_result": null
})");
    return doc;
}

namespace detail {

inline std::string join_path(const std::string& base, const std::string& key) {
    return base.empty() ? key : base + "." + key;
}

inline bool same_kind(const json& a, const json& b) {
    if (a.is_number() && b.is_number()) return true;
    return a.type() == b.type();
}

/// Overlays `user` onto `out` (a copy of the defaults) collecting schema errors.
inline void merge(json& out, const json& user, const std::string& path, std::vector<std::string>& errors) {
    for (auto it = user.begin(); it != user.end(); ++it) {
        const std::string key_path = join_path(path, it.key());
        if (!out.contains(it.key())) {
            errors.push_back("unknown key '" + key_path + "'");
            continue;
        }
        json& slot = out[it.key()];
        if (slot.is_null() || key_path == "disturbances.drag.k" || key_path == "tuner.bounds") {
            slot = it.value();
        } else if (slot.is_object()) {
            if (!it.value().is_object()) errors.push_back("key '" + key_path + "' must be an object");
            else merge(slot, it.value(), key_path, errors);
        } else if (!same_kind(slot, it.value())) {
            errors.push_back("key '" + key_path + "' must be of type " + std::string(slot.type_name()) + ", got " +
                             std::string(it.value().type_name()));
        } else {
            slot = it.value();
        }
    }
}

/// Walks a dotted path; returns nullptr when any part is missing or null.
inline const json* find(const json& doc, const std::string& path) {
    const json* cur = &doc;
    std::size_t start = 0;
    while (start <= path.size()) {
        const std::size_t dot = path.find('.', start);
        const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (!cur->is_object() || !cur->contains(key)) return nullptr;
        cur = &(*cur)[key];
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    return cur->is_null() ? nullptr : cur;
}

inline double number(const json& doc, const std::string& path) {
    const json* j = find(doc, path);
    if (!j || !j->is_number()) throw ConfigError("key '" + path + "' must be a number");
    const double v = j->get<double>();
    if (!std::isfinite(v)) throw ConfigError("key '" + path + "' must be finite");
    return v;
}

inline double number_in(const json& obj, const std::string& key, const std::string& path) {
    if (!obj.contains(key) || !obj[key].is_number()) throw ConfigError("key '" + join_path(path, key) + "' must be a number");
    return obj[key].get<double>();
}

inline void check_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& path) {
    if (!obj.is_object()) throw ConfigError("key '" + path + "' must be an object");
    std::vector<std::string> bad;
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || it.key() == a;
        if (!ok) bad.push_back("unknown key '" + join_path(path, it.key()) + "'");
    }
    if (!bad.empty()) {
        std::string msg = bad[0];
        for (std::size_t i = 1; i < bad.size(); ++i) msg += "; " + bad[i];
        throw ConfigError(msg);
    }
}

/// Number -> constant profile; [[t, v], ...] -> steps. `scale` converts units.
inline StepProfile profile(const json& j, const std::string& path, double scale) {
    if (j.is_number()) return StepProfile(j.get<double>() * scale);
    if (!j.is_array()) throw ConfigError("key '" + path + "' must be a number or a list of [time, value] pairs");
    std::vector<std::pair<double, double>> steps;
    for (const auto& e : j) {
        if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
            throw ConfigError("key '" + path + "' entries must be [time, value] pairs");
        steps.emplace_back(e[0].get<double>(), e[1].get<double>() * scale);
    }
    try {
        return StepProfile(std::move(steps));
    } catch (const InvalidParameter& ex) {
        throw ConfigError("key '" + path + "': " + ex.what());
    }
}

inline std::vector<double> number_list(const json& j, const std::string& path) {
    if (!j.is_array()) throw ConfigError("key '" + path + "' must be a list of numbers");
    std::vector<double> v;
    for (const auto& e : j) {
        if (!e.is_number()) throw ConfigError("key '" + path + "' must be a list of numbers");
        v.push_back(e.get<double>());
    }
    return v;
}

inline const char* subsystem_key(Subsystem s) {
    switch (s) {
        case Subsystem::roll: return "roll";
        case Subsystem::pitch: return "pitch";
        case Subsystem::yaw: return "yaw";
        case Subsystem::altitude: return "altitude";
    }
    return "";
}

}  // namespace detail

/// Settings of the `tune` command that are not part of TuneProblem.
struct TunerSettings {
    enum class Objective { simulation, quadratic_fixture } objective = Objective::simulation;
    TuneOptions options;
    std::vector<double> initial;  ///< empty: start from the configured gains
    std::vector<double> fixture_center;
    std::vector<double> fixture_weights;
};

/// Validated configuration document.
class Config {
public:
    Config() : Config(json::object()) {}

    /// Merges `user` over the defaults and validates every section.
    explicit Config(const json& user) : doc_(default_config()) {
        if (!user.is_object()) throw ConfigError("config root must be an object");
        std::vector<std::string> errors;
        detail::merge(doc_, user, "", errors);
        if (!errors.empty()) {
            std::string msg = "config schema error: " + errors[0];
            for (std::size_t i = 1; i < errors.size(); ++i) msg += "; " + errors[i];
            throw ConfigError(msg);
        }
        // Build once so every problem surfaces at load time.
        (void)params();
        (void)controllers();
        (void)scenario();
        (void)tuner();
        if (tuner().objective == TunerSettings::Objective::simulation) (void)tune_problem();
    }

    static Config parse(const std::string& text) {
        if (text.find_first_not_of(" \t\r\n") == std::string::npos) return Config();
        json j;
        try {
            j = json::parse(text);
        } catch (const json::parse_error& e) {
            throw ConfigError(std::string("config is not valid JSON: ") + e.what());
        }
        return Config(j);
    }

    static Config load(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
        std::stringstream ss;
        ss << in.rdbuf();
        return parse(ss.str());
    }

    const json& document() const { return doc_; }

    std::string dump() const { return doc_.dump(2) + "\n"; }

    QuadParams params() const {
        using detail::number;
        QuadParams p;
        p.mass = {number(doc_, "plant.mass.m_q"), number(doc_, "plant.mass.m_r"), number(doc_, "plant.mass.d0"),
                  number(doc_, "plant.mass.d1")};
        p.g = number(doc_, "plant.g");
        p.mixer = {number(doc_, "plant.mixer.k_f"), number(doc_, "plant.mixer.k_m")};

        const std::string source = doc_["plant"]["inertia"]["source"].get<std::string>();
        const double J_r = number(doc_, "plant.inertia.J_r"), l = number(doc_, "plant.inertia.l");
        try {
            p.mass.validate();
            if (source == "table") {
                p.inertia = InertiaParams::make(number(doc_, "plant.inertia.I_xx"), number(doc_, "plant.inertia.I_yy"),
                                                number(doc_, "plant.inertia.I_zz"), J_r, l);
            } else if (source == "geometry") {
                const json* g = detail::find(doc_, "plant.inertia.geometry");
                if (!g) throw ConfigError("key 'plant.inertia.geometry' is required when source is 'geometry'");
                const std::string gp = "plant.inertia.geometry";
                detail::check_keys(*g, {"R_q", "L_q", "L_r", "W_r", "H_r", "D_r"}, gp);
                GeometryParams geo{detail::number_in(*g, "R_q", gp), detail::number_in(*g, "L_q", gp),
                                   detail::number_in(*g, "L_r", gp), detail::number_in(*g, "W_r", gp),
                                   detail::number_in(*g, "H_r", gp), detail::number_in(*g, "D_r", gp)};
                p.inertia = compose_inertia(geo, p.mass, J_r, l);
            } else {
                throw ConfigError("key 'plant.inertia.source' must be 'table' or 'geometry'");
            }
        } catch (const InvalidParameter& e) {
            throw ConfigError(std::string("plant: ") + e.what());
        }

        DisturbanceParams& d = p.disturbances;
        const json& drag = doc_["disturbances"]["drag"]["k"];
        if (drag.is_number()) d.drag.k.fill(drag.get<double>());
        else {
            const auto v = detail::number_list(drag, "disturbances.drag.k");
            if (v.size() != 6) throw ConfigError("key 'disturbances.drag.k' must be a number or 6 numbers");
            std::copy(v.begin(), v.end(), d.drag.k.begin());
        }
        d.ground = {number(doc_, "disturbances.ground_effect.rho"), number(doc_, "disturbances.ground_effect.r"),
                    number(doc_, "disturbances.ground_effect.z_min")};
        const WindChannel shared{number(doc_, "disturbances.wind.alpha"), number(doc_, "disturbances.wind.beta"),
                                 number(doc_, "disturbances.wind.n")};
        d.wind.channel.fill(shared);
        if (const json* ch = detail::find(doc_, "disturbances.wind.channels")) {
            static const char* names[] = {"phi", "theta", "psi", "z", "x", "y"};
            detail::check_keys(*ch, {"phi", "theta", "psi", "z", "x", "y"}, "disturbances.wind.channels");
            for (std::size_t i = 0; i < 6; ++i) {
                if (!ch->contains(names[i])) continue;
                const std::string cp = std::string("disturbances.wind.channels.") + names[i];
                const json& c = (*ch)[names[i]];
                detail::check_keys(c, {"alpha", "beta", "n"}, cp);
                WindChannel w = shared;
                if (c.contains("alpha")) w.alpha = detail::number_in(c, "alpha", cp);
                if (c.contains("beta")) w.beta = detail::number_in(c, "beta", cp);
                if (c.contains("n")) w.n = detail::number_in(c, "n", cp);
                d.wind.channel[i] = w;
            }
        }
        d.strict_paper_signs = doc_["disturbances"]["strict_paper_signs"].get<bool>();
        d.enabled = scenario().disturbances;
        try {
            p.validate();
        } catch (const InvalidParameter& e) {
            throw ConfigError(std::string("disturbances: ") + e.what());
        }
        return p;
    }

    ControllerSet controllers() const {
        using detail::number;
        ControllerSet c;
        const EsoGains shared = eso_at("controller.eso");
        const double b_min = number(doc_, "controller.b_min");
        if (!(b_min > 0.0)) throw ConfigError("key 'controller.b_min' must be positive");
        for (auto s : kSubsystems) {
            const std::string base = std::string("controller.") + detail::subsystem_key(s);
            SubsystemConfig& sc = c[s];
            sc.which = s;
            sc.eso = detail::find(doc_, base + ".eso") ? eso_at(base + ".eso") : shared;
            sc.pd = {number(doc_, base + ".kp"), number(doc_, base + ".kd")};
            if (!(sc.pd.kp > 0.0) || !(sc.pd.kd > 0.0)) throw ConfigError("key '" + base + "': kp and kd must be positive");
            sc.limits = {number(doc_, base + ".u_min"), number(doc_, base + ".u_max")};
            if (!(sc.limits.lower < sc.limits.upper)) throw ConfigError("key '" + base + "': u_min must be below u_max");
            sc.b_min = b_min;
        }
        return c;
    }

    Scenario scenario() const {
        const json& s = doc_["scenario"];
        const std::string preset = s["preset"].get<std::string>();
        Scenario sc;
        if (preset == "standard") sc = Scenario::standard();
        else if (preset == "open_loop_descent") sc = Scenario::open_loop_descent(mass_only_params());
        else if (preset == "landing") sc = Scenario::landing();
        else if (preset == "hover") sc = Scenario{};
        else throw ConfigError("key 'scenario.preset' must be one of standard, open_loop_descent, landing, hover");

        if (s["duration"].is_number()) sc.duration = s["duration"].get<double>();
        else if (!s["duration"].is_null()) throw ConfigError("key 'scenario.duration' must be a number");
        if (s["dt"].is_number()) sc.dt = s["dt"].get<double>();
        else if (!s["dt"].is_null()) throw ConfigError("key 'scenario.dt' must be a number");

        if (const json* init = detail::find(doc_, "scenario.initial")) {
            const std::string ip = "scenario.initial";
            detail::check_keys(*init, {"phi_deg", "theta_deg", "psi_deg", "phi_dot", "theta_dot", "psi_dot", "altitude",
                                       "z_dot", "x", "x_dot", "y", "y_dot"},
                               ip);
            auto get = [&](const char* k, double fallback) {
                return init->contains(k) ? detail::number_in(*init, k, ip) : fallback;
            };
            QuadState& q = sc.initial;
            q.phi = deg2rad(get("phi_deg", rad2deg(q.phi)));
            q.theta = deg2rad(get("theta_deg", rad2deg(q.theta)));
            q.psi = deg2rad(get("psi_deg", rad2deg(q.psi)));
            q.phi_dot = get("phi_dot", q.phi_dot);
            q.theta_dot = get("theta_dot", q.theta_dot);
            q.psi_dot = get("psi_dot", q.psi_dot);
            q.z = -get("altitude", -q.z);
            q.z_dot = get("z_dot", q.z_dot);
            q.x = get("x", q.x);
            q.x_dot = get("x_dot", q.x_dot);
            q.y = get("y", q.y);
            q.y_dot = get("y_dot", q.y_dot);
        }
        if (const json* refs = detail::find(doc_, "scenario.references")) {
            const std::string rp = "scenario.references";
            detail::check_keys(*refs, {"roll_deg", "pitch_deg", "yaw_deg", "altitude"}, rp);
            const double d2r = deg2rad(1.0);
            if (refs->contains("roll_deg")) sc.roll_ref = detail::profile((*refs)["roll_deg"], rp + ".roll_deg", d2r);
            if (refs->contains("pitch_deg")) sc.pitch_ref = detail::profile((*refs)["pitch_deg"], rp + ".pitch_deg", d2r);
            if (refs->contains("yaw_deg")) sc.yaw_ref = detail::profile((*refs)["yaw_deg"], rp + ".yaw_deg", d2r);
            if (refs->contains("altitude")) sc.altitude_ref = detail::profile((*refs)["altitude"], rp + ".altitude", 1.0);
        }
        if (const json* d1 = detail::find(doc_, "scenario.d1")) sc.d1 = detail::profile(*d1, "scenario.d1", 1.0);
        if (const json* ol = detail::find(doc_, "scenario.open_loop")) {
            if (!ol->is_boolean()) throw ConfigError("key 'scenario.open_loop' must be a boolean");
            const bool was = sc.open_loop;
            sc.open_loop = ol->get<bool>();
            if (sc.open_loop && !was) sc.open_loop_input.U1 = 0.98 * mass_only_params().m() * mass_only_params().g;
        }
        if (const json* in = detail::find(doc_, "scenario.open_loop_input")) {
            const std::string ip = "scenario.open_loop_input";
            detail::check_keys(*in, {"U1", "U2", "U3", "U4"}, ip);
            auto& u = sc.open_loop_input;
            if (in->contains("U1")) u.U1 = detail::number_in(*in, "U1", ip);
            if (in->contains("U2")) u.U2 = detail::number_in(*in, "U2", ip);
            if (in->contains("U3")) u.U3 = detail::number_in(*in, "U3", ip);
            if (in->contains("U4")) u.U4 = detail::number_in(*in, "U4", ip);
        }

        const std::pair<const char*, bool DisturbanceFlags::*> flags[] = {{"drag", &DisturbanceFlags::drag},
                                                                          {"ground_effect", &DisturbanceFlags::ground_effect},
                                                                          {"wind", &DisturbanceFlags::wind},
                                                                          {"com", &DisturbanceFlags::com}};
        for (const auto& [name, member] : flags) {
            const json& e = doc_["disturbances"][name]["enabled"];
            if (e.is_null()) continue;
            if (!e.is_boolean()) throw ConfigError(std::string("key 'disturbances.") + name + ".enabled' must be a boolean");
            sc.disturbances.*member = e.get<bool>();
        }
        try {
            sc.validate();
        } catch (const InvalidParameter& e) {
            throw ConfigError(std::string("scenario: ") + e.what());
        }
        return sc;
    }

    TunerSettings tuner() const {
        using detail::number;
        const json& t = doc_["tuner"];
        TunerSettings ts;
        const std::string obj = t["objective"].get<std::string>();
        if (obj == "simulation") ts.objective = TunerSettings::Objective::simulation;
        else if (obj == "quadratic_fixture") ts.objective = TunerSettings::Objective::quadratic_fixture;
        else throw ConfigError("key 'tuner.objective' must be 'simulation' or 'quadratic_fixture'");

        const double iters = number(doc_, "tuner.max_iterations");
        if (!(iters >= 0.0) || iters != std::floor(iters)) throw ConfigError("key 'tuner.max_iterations' must be a non-negative integer");
        ts.options.max_iterations = static_cast<int>(iters);
        ts.options.initial_step = number(doc_, "tuner.initial_step");
        ts.options.fd_rel_eps = number(doc_, "tuner.fd_epsilon");
        ts.options.fd_floor = number(doc_, "tuner.fd_floor");
        ts.options.tolerance = number(doc_, "tuner.tolerance");
        ts.options.parallel = t["parallel"].get<bool>();
        if (!(ts.options.initial_step > 0.0) || !(ts.options.fd_rel_eps > 0.0) || !(ts.options.fd_floor > 0.0))
            throw ConfigError("tuner step and finite-difference settings must be positive");

        if (const json* init = detail::find(doc_, "tuner.initial")) ts.initial = detail::number_list(*init, "tuner.initial");

        if (ts.objective == TunerSettings::Objective::quadratic_fixture) {
            const json* f = detail::find(doc_, "tuner.fixture");
            if (!f) throw ConfigError("key 'tuner.fixture' is required for the quadratic_fixture objective");
            detail::check_keys(*f, {"center", "weights"}, "tuner.fixture");
            if (!f->contains("center")) throw ConfigError("key 'tuner.fixture.center' is required");
            ts.fixture_center = detail::number_list((*f)["center"], "tuner.fixture.center");
            ts.fixture_weights = f->contains("weights") ? detail::number_list((*f)["weights"], "tuner.fixture.weights")
                                                        : std::vector<double>(ts.fixture_center.size(), 1.0);
            if (ts.fixture_weights.size() != ts.fixture_center.size())
                throw ConfigError("tuner.fixture center and weights must have equal length");
            for (double w : ts.fixture_weights)
                if (!(w > 0.0)) throw ConfigError("tuner.fixture weights must be positive");
        }
        return ts;
    }

    GainLayout layout() const {
        const std::string l = doc_["tuner"]["layout"].get<std::string>();
        if (l == "shared") return GainLayout::shared;
        if (l == "per_subsystem") return GainLayout::per_subsystem;
        throw ConfigError("key 'tuner.layout' must be 'shared' or 'per_subsystem'");
    }

    Box box(std::size_t n) const {
        const json* b = detail::find(doc_, "tuner.box");
        if (!b) {
            if (n == layout_size(layout())) return default_gain_box(layout());
            throw ConfigError("key 'tuner.box' is required when the vector length differs from the gain layout");
        }
        detail::check_keys(*b, {"lower", "upper"}, "tuner.box");
        if (!b->contains("lower") || !b->contains("upper")) throw ConfigError("tuner.box needs 'lower' and 'upper'");
        Box box{detail::number_list((*b)["lower"], "tuner.box.lower"), detail::number_list((*b)["upper"], "tuner.box.upper")};
        if (box.size() != n) throw ConfigError("tuner.box size does not match the decision vector");
        try {
            box.validate();
        } catch (const InvalidParameter& e) {
            throw ConfigError(std::string("tuner.box: ") + e.what());
        }
        return box;
    }

    TuneProblem tune_problem() const {
        TuneProblem p;
        p.layout = layout();
        p.base = controllers();
        p.box = box(layout_size(p.layout));
        p.scenario = scenario();
        p.params = params();
        p.weights = {detail::number(doc_, "tuner.weights.tracking"), detail::number(doc_, "tuner.weights.estimation"),
                     detail::number(doc_, "tuner.weights.effort")};
        p.bound_penalty = detail::number(doc_, "tuner.bound_penalty");

        const json& b = doc_["tuner"]["bounds"];
        if (b.is_string() && b.get<std::string>() == "default") p.bounds = default_bounds(p.scenario);
        else if (b.is_string() && b.get<std::string>() == "none") p.bounds.clear();
        else if (b.is_array()) p.bounds = parse_bounds(b);
        else throw ConfigError("key 'tuner.bounds' must be 'default', 'none' or a list of bounds");

        try {
            p.validate();
        } catch (const InvalidParameter& e) {
            throw ConfigError(std::string("tuner: ") + e.what());
        }
        return p;
    }

    /// Copy with the gains replaced by `v` and a tune_result section attached.
    Config with_tuned_gains(const std::vector<double>& v, GainLayout layout, const json& result) const {
        json user = doc_;
        const ControllerSet c = decode_gains(v, layout, controllers());
        auto eso_json = [](const EsoGains& e) { return json{{"p1", e.p1()}, {"p2", e.p2()}, {"p3", e.p3()}}; };
        if (layout == GainLayout::shared) user["controller"]["eso"] = eso_json(c[Subsystem::roll].eso);
        for (auto s : kSubsystems) {
            json& sub = user["controller"][detail::subsystem_key(s)];
            sub["kp"] = c[s].pd.kp;
            sub["kd"] = c[s].pd.kd;
            if (layout == GainLayout::per_subsystem) sub["eso"] = eso_json(c[s].eso);
        }
        user["tune_result"] = result;
        return Config(user);
    }

    /// Copy with an arbitrary result attached (fixture runs leave the gains alone).
    Config with_result(const json& result) const {
        json user = doc_;
        user["tune_result"] = result;
        return Config(user);
    }

private:
    EsoGains eso_at(const std::string& path) const {
        const json* e = detail::find(doc_, path);
        if (!e) throw ConfigError("key '" + path + "' is required");
        detail::check_keys(*e, {"p1", "p2", "p3"}, path);
        const double p1 = detail::number_in(*e, "p1", path), p2 = detail::number_in(*e, "p2", path),
                     p3 = detail::number_in(*e, "p3", path);
        if (!is_hurwitz(p1, p2, p3)) {
            std::ostringstream os;
            os << "key '" << path << "': ESO gains are not Hurwitz (need p1>0, p3>0, p1*p2>p3; got p1=" << p1
               << ", p2=" << p2 << ", p3=" << p3 << ", p1*p2=" << p1 * p2 << ")";
            throw ConfigError(os.str());
        }
        return {p1, p2, p3};
    }

    QuadParams mass_only_params() const {
        QuadParams p;
        p.mass = {detail::number(doc_, "plant.mass.m_q"), detail::number(doc_, "plant.mass.m_r"),
                  detail::number(doc_, "plant.mass.d0"), detail::number(doc_, "plant.mass.d1")};
        p.g = detail::number(doc_, "plant.g");
        return p;
    }

    static std::vector<SignalBound> parse_bounds(const json& arr) {
        std::vector<SignalBound> out;
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const std::string bp = "tuner.bounds[" + std::to_string(i) + "]";
            const json& b = arr[i];
            detail::check_keys(b, {"signal", "segments"}, bp);
            if (!b.contains("signal") || !b["signal"].is_string()) throw ConfigError("key '" + bp + ".signal' must be a string");
            SignalBound sb;
            sb.signal = b["signal"].get<std::string>();
            if (!b.contains("segments") || !b["segments"].is_array())
                throw ConfigError("key '" + bp + ".segments' must be a list of [t_start, t_end, lower, upper]");
            for (const auto& s : b["segments"]) {
                const auto v = detail::number_list(s, bp + ".segments");
                if (v.size() != 4) throw ConfigError("key '" + bp + ".segments' entries need 4 numbers");
                sb.segments.push_back({v[0], v[1], v[2], v[3]});
            }
            out.push_back(std::move(sb));
        }
        return out;
    }

    json doc_;
};

}  // namespace qmadrc
