// Command-line front end: simulate, tune, plots.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "qmadrc/config.hpp"
#include "qmadrc/plots.hpp"
#include "qmadrc/sim.hpp"
#include "qmadrc/tuner.hpp"

namespace fs = std::filesystem;
using namespace qmadrc;

namespace {

constexpr int kOk = 0;
constexpr int kRuntimeFailure = 1;
constexpr int kConfigError = 2;

Config load(const std::string& path) { return path.empty() ? Config() : Config::load(path); }

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << text;
}

fs::path history_path(const fs::path& out) {
    fs::path h = out;
    h.replace_extension();
    return h.string() + ".history.csv";
}

void write_history(const fs::path& path, const std::vector<IterationRecord>& history) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    const std::size_t n = history.empty() ? 0 : history.front().x.size();
    out << "iteration,cost,step";
    for (std::size_t i = 0; i < n; ++i) out << ",x" << i;
    out << '\n';
    out.precision(17);
    for (const auto& h : history) {
        out << h.iteration << ',' << h.cost << ',' << h.step;
        for (double v : h.x) out << ',' << v;
        out << '\n';
    }
}

int cmd_simulate(const std::string& config_path, const std::string& out_path) {
    const Config cfg = load(config_path);
    const TraceLog trace = run(cfg.scenario(), cfg.params(), cfg.controllers());
    std::ostringstream csv;
    trace.write_csv(csv);
    write_text(out_path, csv.str());
    std::cout << "wrote " << trace.size() << " records to " << out_path << '\n';
    return kOk;
}

int cmd_tune(const std::string& config_path, const std::string& out_path) {
    const Config cfg = load(config_path);
    const TunerSettings ts = cfg.tuner();
    json result;
    std::vector<IterationRecord> history;
    std::optional<Config> written;

    if (ts.objective == TunerSettings::Objective::quadratic_fixture) {
        const std::size_t n = ts.fixture_center.size();
        const Box box = cfg.box(n);
        std::vector<double> x0 = ts.initial;
        if (x0.empty()) {
            if (n != layout_size(cfg.layout())) throw ConfigError("key 'tuner.initial' is required for this fixture size");
            x0 = encode_gains(cfg.controllers(), cfg.layout());
        }
        if (x0.size() != n) throw ConfigError("tuner.initial length does not match tuner.fixture.center");
        auto quadratic = [&](const std::vector<double>& x) {
            double c = 0.0;
            for (std::size_t i = 0; i < n; ++i) c += ts.fixture_weights[i] * (x[i] - ts.fixture_center[i]) * (x[i] - ts.fixture_center[i]);
            return c;
        };
        const OptimizeResult r = minimize_box(quadratic, x0, box, ts.options);
        result = {{"objective", "quadratic_fixture"}, {"vector", r.x},         {"cost", r.cost},
                  {"initial_cost", r.history.front().cost}, {"iterations", r.history.size() - 1},
                  {"stop_reason", r.stop_reason},           {"evaluations", r.evaluations}};
        history = r.history;
        written = cfg.with_result(result);
    } else {
        const TuneProblem prob = cfg.tune_problem();
        const std::vector<double> x0 = ts.initial.empty() ? encode_gains(cfg.controllers(), prob.layout) : ts.initial;
        const TuneResult r = tune(prob, x0, ts.options);
        json violations = json::array();
        for (const auto& v : r.report.bounds)
            if (v.max_excess > 0.0)
                violations.push_back({{"signal", v.signal}, {"segment", v.segment}, {"integrated_excess", v.integrated_excess},
                                      {"max_excess", v.max_excess}});
        result = {{"objective", "simulation"},
                  {"vector", r.x},
                  {"cost", r.cost},
                  {"initial_cost", r.history.front().cost},
                  {"iterations", r.history.size() - 1},
                  {"stop_reason", r.stop_reason},
                  {"evaluations", r.evaluations},
                  {"diverged", r.report.diverged},
                  {"violations", violations}};
        history = r.history;
        written = cfg.with_tuned_gains(r.x, prob.layout, result);
    }

    write_text(out_path, written->dump());
    const fs::path hist = history_path(out_path);
    write_history(hist, history);
    std::cout << "cost " << result["initial_cost"].get<double>() << " -> " << result["cost"].get<double>() << " after "
              << result["iterations"].get<std::size_t>() << " iterations (" << result["stop_reason"].get<std::string>()
              << "); wrote " << out_path << " and " << hist.string() << '\n';
    return kOk;
}

int cmd_plots(const std::string& trace_path, const std::string& out_dir) {
    const auto files = write_plot_scripts(trace_path, out_dir);
    std::cout << "wrote " << files.size() << " plot scripts to " << out_dir << '\n';
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quadrotor-manipulator ADRC simulator and gain tuner"};
    app.require_subcommand(1);

    std::string config_path, out_path, trace_path;
    int seed = 0;
    app.add_option("--seed", seed, "Reserved; the simulator is deterministic");

    auto* sim = app.add_subcommand("simulate", "Run a scenario and write the trace CSV");
    sim->add_option("--config", config_path, "JSON config (defaults when omitted)");
    sim->add_option("--out", out_path, "Output CSV")->required();

    auto* tun = app.add_subcommand("tune", "Optimise controller gains; writes a config and a history CSV");
    tun->add_option("--config", config_path, "JSON config (defaults when omitted)");
    tun->add_option("--out", out_path, "Output config")->required();

    auto* plt = app.add_subcommand("plots", "Emit gnuplot scripts for a trace CSV");
    plt->add_option("--trace", trace_path, "Trace CSV")->required();
    plt->add_option("--out", out_path, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // Usage errors share the config/input exit code; --help exits 0.
        return app.exit(e) == 0 ? kOk : kConfigError;
    }

    try {
        if (sim->parsed()) return cmd_simulate(config_path, out_path);
        if (tun->parsed()) return cmd_tune(config_path, out_path);
        if (plt->parsed()) return cmd_plots(trace_path, out_path);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const InvalidParameter& e) {
        std::cerr << "invalid parameter: " << e.what() << '\n';
        return kConfigError;
    } catch (const InvalidInput& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return kConfigError;
    } catch (const DivergenceError& e) {
        std::cerr << "divergence: " << e.what() << '\n';
        return kRuntimeFailure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntimeFailure;
    }
    return kRuntimeFailure;
}
