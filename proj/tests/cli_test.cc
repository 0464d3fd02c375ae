// Copyright 2026 The jacprop Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "jacprop/cli.h"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "jacprop/io.h"

namespace jacprop {
namespace {

namespace fs = std::filesystem;

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult cli(std::vector<std::string> args) {
  args.insert(args.begin(), "jacprop");
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int count_lines(const std::string& s) {
  return static_cast<int>(std::count(s.begin(), s.end(), '\n'));
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("jacprop_cli_" + std::string(::testing::UnitTest::GetInstance()
                                             ->current_test_info()
                                             ->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  // Small linear problem so each run takes milliseconds.
  fs::path small_config(const std::string& extra = "") {
    const fs::path path = dir_ / "cfg.json";
    Json j = Json::parse(R"({
      "name": "small", "benchmark": "linear", "state_dim": 2, "T": 30,
      "epochs": 6, "ensemble_size": 2, "hidden_width": 4, "n_runs": 2,
      "spectrum_points": 4, "checkpoints": [1, 3, 5]
    })");
    if (!extra.empty()) j.update(Json::parse(extra));
    write_json_file(path, j);
    return path;
  }

  fs::path dir_;
};

TEST_F(CliTest, HelpAndUsage) {
  EXPECT_EQ(cli({"--help"}).code, kExitOk);
  EXPECT_EQ(cli({}).code, kExitUsage);
  EXPECT_EQ(cli({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(cli({"run", "--bogus"}).code, kExitUsage);
}

TEST_F(CliTest, GenLinear) {
  const auto a = cli({"gen-linear", "--n", "10", "--dt", "0.1", "--seed", "1", "-o",
                      (dir_ / "a.json").string()});
  ASSERT_EQ(a.code, kExitOk) << a.err;
  EXPECT_NE(a.out.find("max |modulus - exp(-dt^2)|"), std::string::npos);
  const auto b = cli({"gen-linear", "--n", "10", "--dt", "0.1", "--seed", "1", "-o",
                      (dir_ / "b.json").string()});
  ASSERT_EQ(b.code, kExitOk);
  EXPECT_EQ(slurp(dir_ / "a.json"), slurp(dir_ / "b.json"));
  const Json j = read_json_file(dir_ / "a.json");
  EXPECT_EQ(j["n"], 10);
  EXPECT_EQ(j["A"].size(), 10u);

  cli({"gen-linear", "--seed", "2", "-o", (dir_ / "c.json").string()});
  EXPECT_NE(slurp(dir_ / "a.json"), slurp(dir_ / "c.json"));
}

TEST_F(CliTest, GenLinearBadDimensions) {
  EXPECT_EQ(cli({"gen-linear", "--n", "0"}).code, kExitUsage);
  EXPECT_EQ(cli({"gen-linear", "--m", "0"}).code, kExitUsage);
  EXPECT_EQ(cli({"gen-linear", "--dt", "-1"}).code, kExitUsage);
}

TEST_F(CliTest, RunWritesOneRowPerRun) {
  const auto r = cli({"run", "-c", small_config().string(), "-o", dir_.string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const fs::path arm = dir_ / "small" / "tangent";
  EXPECT_EQ(count_lines(slurp(arm / "results.csv")), 1 + 2);
  EXPECT_TRUE(fs::exists(arm / "summary.json"));
  EXPECT_TRUE(fs::exists(arm / "timing.json"));
  const Json resolved = read_json_file(arm / "config.resolved.json");
  EXPECT_EQ(resolved["tangent_reg"], true);
  EXPECT_EQ(resolved["state_dim"], 2);
}

TEST_F(CliTest, RunPairedArms) {
  const auto r = cli({"run", "-c", small_config().string(), "--arms", "baseline,tangent",
                      "-o", dir_.string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  for (const char* arm : {"baseline", "tangent"}) {
    const std::string csv = slurp(dir_ / "small" / arm / "results.csv");
    EXPECT_EQ(count_lines(csv), 3) << arm;
    EXPECT_NE(csv.find(std::string(",") + arm + ","), std::string::npos);
  }
  // Paired seeds: run i of each arm uses the same seed.
  const std::string base = slurp(dir_ / "small" / "baseline" / "results.csv");
  const std::string tang = slurp(dir_ / "small" / "tangent" / "results.csv");
  auto seeds = [](const std::string& csv) {
    std::vector<std::string> out;
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) out.push_back(line.substr(0, line.find(',', line.find(',') + 1)));
    return out;
  };
  EXPECT_EQ(seeds(base), seeds(tang));
}

TEST_F(CliTest, RunConfigErrors) {
  EXPECT_EQ(cli({"run", "-c", small_config(R"({"colour": "red"})").string()}).code,
            kExitUsage);
  EXPECT_EQ(cli({"run", "-c", (dir_ / "none.json").string()}).code, kExitUsage);
  EXPECT_EQ(cli({"run", "-c", small_config().string(), "--set", "dropout=2"}).code,
            kExitUsage);
  EXPECT_EQ(cli({"run", "-c", small_config().string(), "--arms", "placebo"}).code,
            kExitUsage);
}

TEST_F(CliTest, RunOutputIndependentOfJobs) {
  const auto cfg = small_config(R"({"n_runs": 4})");
  ASSERT_EQ(cli({"run", "-c", cfg.string(), "--arms", "baseline,tangent", "-j", "1",
                 "-o", (dir_ / "serial").string()})
                .code,
            kExitOk);
  ASSERT_EQ(cli({"run", "-c", cfg.string(), "--arms", "baseline,tangent", "-j", "3",
                 "-o", (dir_ / "parallel").string()})
                .code,
            kExitOk);
  for (const char* arm : {"baseline", "tangent"}) {
    for (const char* file : {"results.csv", "summary.json"}) {
      EXPECT_EQ(slurp(dir_ / "serial" / "small" / arm / file),
                slurp(dir_ / "parallel" / "small" / arm / file))
          << arm << "/" << file;
    }
  }
}

TEST_F(CliTest, FlagsOverrideFile) {
  const auto r = cli({"run", "-c", small_config().string(), "--n-runs", "1",
                      "--base-seed", "9", "--set", "name=other", "-o", dir_.string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const std::string csv = slurp(dir_ / "other" / "tangent" / "results.csv");
  EXPECT_EQ(count_lines(csv), 2);
  EXPECT_NE(csv.find("\r\n0,9,"), std::string::npos);
}

TEST_F(CliTest, OutputRootFromEnvironment) {
  ::setenv("JACPROP_OUT", (dir_ / "env").string().c_str(), 1);
  const auto r = cli({"run", "-c", small_config(R"({"n_runs": 1})").string()});
  ::unsetenv("JACPROP_OUT");
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_TRUE(fs::exists(dir_ / "env" / "small" / "tangent" / "results.csv"));
}

TEST_F(CliTest, ActivationStudyRowCount) {
  const auto r = cli({"activation-study", "-c", small_config().string(), "-o",
                      dir_.string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const std::string csv = slurp(dir_ / "small" / "activation_study.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "activation,epoch,run,log_error\r");
  EXPECT_EQ(count_lines(csv), 1 + 6 * 2 * 3);
  EXPECT_NE(r.out.find("relu and leaky_relu medians"), std::string::npos);
}

TEST_F(CliTest, SimulateThenFitLtv) {
  const auto gen = cli({"gen-linear", "--n", "3", "--seed", "4", "-o",
                        (dir_ / "sys.json").string()});
  ASSERT_EQ(gen.code, kExitOk);
  const fs::path traj = dir_ / "traj.csv";
  const auto sim = cli({"simulate", "-c", small_config().string(), "--system",
                        (dir_ / "sys.json").string(), "--traj-out", traj.string()});
  ASSERT_EQ(sim.code, kExitOk) << sim.err;
  const Trajectory t = load_trajectory(traj);
  EXPECT_EQ(t.state_dim(), 3);
  EXPECT_EQ(t.length(), 30);
  EXPECT_DOUBLE_EQ(t.dt, 0.1);

  const auto fit = cli({"fit-ltv", "-t", traj.string(), "--lambda", "100", "-o",
                        (dir_ / "ltv.json").string()});
  ASSERT_EQ(fit.code, kExitOk) << fit.err;
  const Json ltv = read_json_file(dir_ / "ltv.json");
  EXPECT_EQ(ltv["k"].size(), 29u);
  EXPECT_EQ(ltv["k"][0].size(), 3u * 4u);

  EXPECT_EQ(cli({"fit-ltv"}).code, kExitUsage);
  EXPECT_EQ(cli({"fit-ltv", "-t", (dir_ / "absent.csv").string()}).code, kExitUsage);
}

TEST_F(CliTest, SimulateRobot) {
  const auto r = cli({"simulate", "--set", "T=50", "--traj-out", (dir_ / "r.csv").string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const Trajectory t = load_trajectory(dir_ / "r.csv");
  EXPECT_EQ(t.state_dim(), 4);
  EXPECT_EQ(t.input_dim(), 2);
  EXPECT_DOUBLE_EQ(t.dt, 0.01);
}

TEST_F(CliTest, Spectrum) {
  const auto r = cli({"spectrum", "-c", small_config().string(), "--points", "3", "-o",
                      dir_.string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const std::string csv = slurp(dir_ / "small" / "spectrum.csv");
  // 3 points x 2 eigenvalues x (learned, true).
  EXPECT_EQ(count_lines(csv), 1 + 12);
}

}  // namespace
}  // namespace jacprop
