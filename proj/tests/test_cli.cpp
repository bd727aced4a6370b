#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "qmadrc/config.hpp"
#include "qmadrc/plots.hpp"
#include "qmadrc/tuner.hpp"

namespace fs = std::filesystem;
using namespace qmadrc;

namespace {

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        dir_ = fs::temp_directory_path() / (std::string("qmadrc_cli_") + info->name());
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    fs::path path(const std::string& name) const { return dir_ / name; }

    fs::path write(const std::string& name, const std::string& text) const {
        std::ofstream(path(name)) << text;
        return path(name);
    }

    int run(const std::string& args) const {
        const std::string cmd = std::string("\"") + QMADRC_CLI + "\" " + args + " > \"" + path("stdout.txt").string() +
                                "\" 2> \"" + path("stderr.txt").string() + "\"";
        const int status = std::system(cmd.c_str());
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }

    std::string stderr_text() const { return read(path("stderr.txt")); }

    static std::string read(const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }

    static std::size_t lines(const fs::path& p) {
        const std::string s = read(p);
        return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
    }

    fs::path dir_;
};

}  // namespace

TEST_F(Cli, SimulateDefaultsWritesFullTrace) {
    ASSERT_EQ(run("simulate --out " + path("trace.csv").string()), 0) << stderr_text();
    EXPECT_EQ(lines(path("trace.csv")), 10001u + 1u);
}

TEST_F(Cli, SimulateIsIdempotent) {
    const auto cfg = write("c.json", R"({"scenario": {"duration": 1.0}})");
    ASSERT_EQ(run("simulate --config " + cfg.string() + " --out " + path("a.csv").string()), 0);
    const std::string first = read(path("a.csv"));
    ASSERT_EQ(run("simulate --config " + cfg.string() + " --out " + path("a.csv").string()), 0);
    EXPECT_EQ(read(path("a.csv")), first);
    EXPECT_EQ(lines(path("a.csv")), 1002u);
}

TEST_F(Cli, OpenLoopConfigBounces) {
    const auto cfg = write("ol.json", R"({"scenario": {"preset": "open_loop_descent"}})");
    ASSERT_EQ(run("simulate --config " + cfg.string() + " --out " + path("ol.csv").string()), 0) << stderr_text();
    std::ifstream in(path("ol.csv"));
    std::string line;
    std::getline(in, line);
    const auto cols = TraceLog::columns();
    const auto alt_col = static_cast<std::size_t>(std::find(cols.begin(), cols.end(), "altitude") - cols.begin());
    std::vector<double> alt;
    while (std::getline(in, line)) {
        std::stringstream ss(line);
        std::string cell;
        for (std::size_t i = 0; i <= alt_col; ++i) std::getline(ss, cell, ',');
        alt.push_back(std::stod(cell));
    }
    bool rose_after_falling = false;
    for (std::size_t k = 1; k + 1 < alt.size(); ++k)
        if (alt[k] < alt[k - 1] && alt[k] <= alt[k + 1] && alt[k] < 4.0) rose_after_falling = true;
    EXPECT_TRUE(rose_after_falling);
}

TEST_F(Cli, HurwitzViolationExitsWithConfigError) {
    const auto cfg = write("bad.json", R"({"controller": {"eso": {"p1": 1, "p2": 1, "p3": 3000}}})");
    EXPECT_EQ(run("simulate --config " + cfg.string() + " --out " + path("x.csv").string()), 2);
    EXPECT_NE(stderr_text().find("Hurwitz"), std::string::npos);
    EXPECT_FALSE(fs::exists(path("x.csv")));
}

TEST_F(Cli, SchemaErrorNamesKeys) {
    const auto cfg = write("bad.json", R"({"plant": {"mass": {"mq": 1}}, "extra": true})");
    EXPECT_EQ(run("simulate --config " + cfg.string() + " --out " + path("x.csv").string()), 2);
    EXPECT_NE(stderr_text().find("plant.mass.mq"), std::string::npos);
    EXPECT_NE(stderr_text().find("extra"), std::string::npos);
}

TEST_F(Cli, MissingConfigAndUsageErrors) {
    EXPECT_EQ(run("simulate --config " + path("nope.json").string() + " --out " + path("x.csv").string()), 2);
    EXPECT_EQ(run("simulate"), 2);
    EXPECT_EQ(run("frobnicate"), 2);
    EXPECT_EQ(run("--help"), 0);
}

TEST_F(Cli, DivergenceIsRuntimeFailure) {
    const auto blow = write("blow.json", R"({"scenario": {"preset": "hover", "open_loop": true,
        "open_loop_input": {"U1": 0, "U2": 5000}, "duration": 10}})");
    EXPECT_EQ(run("simulate --config " + blow.string() + " --out " + path("b.csv").string()), 1);
    EXPECT_NE(stderr_text().find("diverg"), std::string::npos) << stderr_text();
}

TEST_F(Cli, TuneFixtureConverges) {
    const auto cfg = write("fx.json", R"({"tuner": {"objective": "quadratic_fixture", "max_iterations": 500,
        "tolerance": 0, "parallel": false, "initial": [0, 0, 0], "box": {"lower": [-5, -5, -5], "upper": [5, 5, 5]},
        "fixture": {"center": [1.5, -2.0, 0.25], "weights": [1, 3, 0.5]}}})");
    ASSERT_EQ(run("tune --config " + cfg.string() + " --out " + path("fx_out.json").string()), 0) << stderr_text();
    const Config out = Config::load(path("fx_out.json"));
    const auto v = out.document()["tune_result"]["vector"].get<std::vector<double>>();
    EXPECT_NEAR(v[0], 1.5, 1e-4);
    EXPECT_NEAR(v[1], -2.0, 1e-4);
    EXPECT_NEAR(v[2], 0.25, 1e-4);
    EXPECT_TRUE(fs::exists(path("fx_out.history.csv")));
}

TEST_F(Cli, TuneZeroIterationsEchoesGains) {
    const auto cfg = write("z.json", R"({"scenario": {"duration": 1.0}, "tuner": {"max_iterations": 0}})");
    ASSERT_EQ(run("tune --config " + cfg.string() + " --out " + path("z_out.json").string()), 0) << stderr_text();
    const Config out = Config::load(path("z_out.json"));
    EXPECT_EQ(encode_gains(out.controllers(), GainLayout::shared), encode_gains(ControllerSet::table(), GainLayout::shared));
    EXPECT_EQ(lines(path("z_out.history.csv")), 2u);
}

TEST_F(Cli, TuneFromHalfGainsRoundTrips) {
    std::vector<double> half = encode_gains(ControllerSet::table(), GainLayout::shared);
    for (double& x : half) x *= 0.5;
    const auto cfg = write("h.json", json{{"scenario", {{"duration", 2.0}}},
                                          {"tuner", {{"max_iterations", 2}, {"initial", half}}}}
                                         .dump());
    ASSERT_EQ(run("tune --config " + cfg.string() + " --out " + path("h_out.json").string()), 0) << stderr_text();
    const Config out = Config::load(path("h_out.json"));
    const json& res = out.document()["tune_result"];
    EXPECT_LE(res["cost"].get<double>(), res["initial_cost"].get<double>());
    // The written gains reproduce the recorded cost.
    const TuneProblem p = out.tune_problem();
    EXPECT_EQ(cost(encode_gains(out.controllers(), GainLayout::shared), p), res["cost"].get<double>());
    // And the file loads and re-dumps unchanged.
    EXPECT_EQ(out.dump(), read(path("h_out.json")));
    ASSERT_EQ(run("simulate --config " + path("h_out.json").string() + " --out " + path("h.csv").string()), 0);
}

TEST_F(Cli, TuneInfeasibleStartIsDiagnosed) {
    const auto cfg = write("inf.json", R"({"scenario": {"duration": 1.0}, "tuner": {"initial": [1, 1, 1000, 1, 1, 1, 1, 1, 1, 1, 1]}})");
    EXPECT_EQ(run("tune --config " + cfg.string() + " --out " + path("o.json").string()), 2);
    EXPECT_NE(stderr_text().find("infeasible"), std::string::npos) << stderr_text();
}

TEST_F(Cli, PlotsForStandardTrace) {
    const auto cfg = write("c.json", R"({"scenario": {"duration": 0.1}})");
    ASSERT_EQ(run("simulate --config " + cfg.string() + " --out " + path("t.csv").string()), 0);
    ASSERT_EQ(run("plots --trace " + path("t.csv").string() + " --out " + path("plots").string()), 0) << stderr_text();
    std::vector<std::string> names;
    for (const auto& e : fs::directory_iterator(path("plots"))) names.push_back(e.path().filename().string());
    std::sort(names.begin(), names.end());
    ASSERT_EQ(names.size(), 13u);
    EXPECT_EQ(names.front(), "fig05_altitude_ground_effect.gp");
    EXPECT_EQ(names.back(), "fig17_yaw_control_input.gp");
    const std::string fig7 = read(path("plots") / "fig07_alt_total_disturbance.gp");
    EXPECT_NE(fig7.find("column('fhat_alt')"), std::string::npos);
}

TEST_F(Cli, PlotsRejectEmptyTrace) {
    write("empty.csv", "");
    EXPECT_EQ(run("plots --trace " + path("empty.csv").string() + " --out " + path("p").string()), 2);
    write("header_only.csv", "time,altitude\n");
    EXPECT_EQ(run("plots --trace " + path("header_only.csv").string() + " --out " + path("p").string()), 2);
}

TEST_F(Cli, PlotsNameMissingColumns) {
    write("trunc.csv", "time,phi,theta,altitude\n0,0,0,0\n");
    EXPECT_EQ(run("plots --trace " + path("trunc.csv").string() + " --out " + path("p").string()), 2);
    const std::string err = stderr_text();
    EXPECT_NE(err.find("fhat_alt"), std::string::npos) << err;
    EXPECT_NE(err.find("u_roll"), std::string::npos) << err;
    EXPECT_EQ(err.find(" phi"), std::string::npos) << err;
}
