#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <json.hpp>

namespace fs = std::filesystem;

namespace {

const fs::path kTmp = fs::temp_directory_path() / "bohm_arrival_cli_test";

int run(const std::string& args) {
    const std::string cmd = std::string(BOHM_ARRIVAL_EXE) + " " + args + " >" +
                            (kTmp / "stdout.txt").string() + " 2>" + (kTmp / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

class Cli : public ::testing::Test {
  protected:
    void SetUp() override {
        fs::remove_all(kTmp);
        fs::create_directories(kTmp);
    }
};

}  // namespace

TEST_F(Cli, SimulateWritesRecordsAndSummary) {
    const auto out = kTmp / "a";
    ASSERT_EQ(run("simulate --spin updown --omega 500 --L 50 --n 200 --seed 3 --out " + out.string()), 0);
    const auto j = nlohmann::json::parse(slurp(out / "summary.json"));
    EXPECT_EQ(j["n"], 200);
    EXPECT_EQ(j["seed"], 3);
    EXPECT_LE(j["max"].get<double>(), j["bound"].get<double>());
    EXPECT_EQ(slurp(out / "records.csv").rfind("x0,y0,z0,tau,crossings\n", 0), 0u);
}

TEST_F(Cli, OutputDoesNotDependOnThreads) {
    ASSERT_EQ(run("simulate --n 150 --seed 9 --threads 1 --out " + (kTmp / "t1").string()), 0);
    ASSERT_EQ(run("simulate --n 150 --seed 9 --threads 3 --out " + (kTmp / "t3").string()), 0);
    EXPECT_EQ(slurp(kTmp / "t1" / "records.csv"), slurp(kTmp / "t3" / "records.csv"));
    EXPECT_EQ(slurp(kTmp / "t1" / "summary.json"), slurp(kTmp / "t3" / "summary.json"));
}

TEST_F(Cli, ConfigFileIsOverriddenByFlags) {
    {
        std::ofstream cfg(kTmp / "run.ini");
        cfg << "spin = up\nomega = 500\nL = 10\nn = 50\nseed = 4\n";
    }
    const auto out = kTmp / "c";
    ASSERT_EQ(run("simulate --config " + (kTmp / "run.ini").string() + " --n 70 --out " + out.string()), 0);
    const auto j = nlohmann::json::parse(slurp(out / "summary.json"));
    EXPECT_EQ(j["spin"], "up");
    EXPECT_EQ(j["L"], 10.0);
    EXPECT_EQ(j["n"], 70);
}

TEST_F(Cli, AnalyticReportsMoments) {
    const auto out = kTmp / "an";
    ASSERT_EQ(run("analytic --L 50 --out " + out.string()), 0);
    const auto j = nlohmann::json::parse(slurp(out / "summary.json"));
    EXPECT_NEAR(j["mean"].get<double>(), 56.4077, 0.01);
    EXPECT_EQ(slurp(out / "density.csv").rfind("tau,density,cdf\n", 0), 0u);
}

TEST_F(Cli, DivergentMomentIsATypedError) {
    EXPECT_EQ(run("analytic --L 50 --mu 3 --out " + (kTmp / "d").string()), 1);
    const auto j = nlohmann::json::parse(slurp(kTmp / "stderr.txt"));
    EXPECT_EQ(j["schema"], 1);
    EXPECT_EQ(j["error"]["kind"], "divergent_moment");
}

TEST_F(Cli, LimitdistSummary) {
    const auto out = kTmp / "ld";
    ASSERT_EQ(run("limitdist --L 10 --out " + out.string()), 0);
    const auto j = nlohmann::json::parse(slurp(out / "summary.json"));
    EXPECT_NEAR(j["mass"].get<double>(), 1.0, 1e-6);
    EXPECT_NEAR(j["tau_max_limit"].get<double>(), std::sqrt(99.0), 1e-12);
}

TEST_F(Cli, TrajectoryDump) {
    const auto out = kTmp / "tr";
    ASSERT_EQ(run("trajectory --spin updown --omega 50 --x0 0.3 --y0 0.1 --z0 0.5 --points 11 --out " +
                  out.string()), 0);
    const std::string csv = slurp(out / "trajectory.csv");
    EXPECT_EQ(csv.rfind("t,x,y,z,xi,H\n", 0), 0u);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 12);
}

TEST_F(Cli, UsageErrorsExitWithTwo) {
    EXPECT_EQ(run("simulate --n 0"), 2);
    EXPECT_EQ(run("simulate --omega -1"), 2);
    EXPECT_EQ(run("simulate --L 0.5"), 2);
    EXPECT_EQ(run("simulate --spin down"), 2);
    EXPECT_EQ(run("simulate --bins nope"), 2);
    EXPECT_EQ(run("trajectory --z0 -1"), 2);
    EXPECT_EQ(run("frobnicate"), 2);
    EXPECT_EQ(run(""), 2);
    EXPECT_EQ(run("--help"), 0);
}
