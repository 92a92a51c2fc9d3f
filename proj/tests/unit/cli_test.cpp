/*
 * Copyright 2026 The SLADV Bench Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <sys/wait.h>

#include "json.hpp"
#include "oracles.hpp"

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           (std::string("sladv_cli_") + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    config_ = dir_ / "tiny.json";
    std::ofstream(config_) << sladv::testing::tiny_config_json(40);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int sladv(const std::string& args) {
    const std::string cmd = std::string(SLADV_CLI_PATH) + " " + args + " >" + (dir_ / "stdout").string() + " 2>" +
                            (dir_ / "stderr").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  fs::path write_config(const std::string& name, const std::string& text) {
    std::ofstream(dir_ / name) << text;
    return dir_ / name;
  }

  fs::path dir_;
  fs::path config_;
};

TEST_F(Cli, InvalidConfigExitsTwoWithoutOutputs) {
  const auto bad = write_config("bad.json", R"({"shadow": {"alpha": -1}})");
  EXPECT_EQ(sladv("train --config " + bad.string() + " --out " + (dir_ / "run").string()), 2);
  EXPECT_FALSE(fs::exists(dir_ / "run"));
  EXPECT_NE(slurp(dir_ / "stderr").find("shadow.alpha"), std::string::npos);
}

TEST_F(Cli, UnknownFlagExitsTwo) { EXPECT_EQ(sladv("train --bogus"), 2); }

TEST_F(Cli, UnreadableConfigExitsThree) {
  EXPECT_EQ(sladv("train --config " + (dir_ / "missing.json").string() + " --out " + (dir_ / "run").string()), 3);
}

TEST_F(Cli, MissingCheckpointExitsFour) {
  EXPECT_EQ(sladv("attack --config " + config_.string() + " --out " + (dir_ / "empty").string()), 4);
  EXPECT_EQ(sladv("probe --config " + config_.string() + " --out " + (dir_ / "empty").string()), 4);
  EXPECT_EQ(sladv("report --out " + (dir_ / "empty").string()), 4);
}

TEST_F(Cli, TrainAttackProbeReport) {
  const std::string out = " --out " + (dir_ / "run").string();
  ASSERT_EQ(sladv("train --config " + config_.string() + out), 0);
  for (const char* f : {"theta1.slnn", "theta2.slnn", "theta3.slnn", "shadow.slnn"}) {
    EXPECT_TRUE(fs::exists(dir_ / "run" / "checkpoints" / f)) << f;
  }
  const std::string metrics = slurp(dir_ / "run" / "metrics.csv");
  EXPECT_EQ(metrics.rfind("# sladv-metrics v1\n", 0), 0u);
  // The config echoed by train is reused when --config is omitted.
  ASSERT_EQ(sladv("attack" + out), 0);
  const json report = json::parse(slurp(dir_ / "run" / "report.json"));
  EXPECT_NEAR(report["accuracy_drop"].get<double>(),
              100.0 * (report["clean_accuracy"].get<double>() - report["adversarial_accuracy"].get<double>()), 1e-9);
  EXPECT_EQ(report["sim_series"].size(), 40u);
  EXPECT_TRUE(fs::exists(dir_ / "run" / "adv" / "batch_000.slnn"));
  const json sidecar = json::parse(slurp(dir_ / "run" / "adv" / "batch_000.json"));
  EXPECT_EQ(sidecar["epsilon"].get<double>(), 0.3);
  EXPECT_EQ(sidecar["K"].get<int>(), 1);
  ASSERT_EQ(sladv("probe" + out), 0);
  const json probes = json::parse(slurp(dir_ / "run" / "probes.json"));
  for (const char* k : {"d_hat", "alignment_cos", "sign_fraction", "transfer_cos"}) EXPECT_TRUE(probes.contains(k));
  EXPECT_EQ(sladv("report" + out), 0);
}

TEST_F(Cli, EndToEndDeterminism) {
  ASSERT_EQ(sladv("train --config " + config_.string() + " --out " + (dir_ / "a").string()), 0);
  ASSERT_EQ(sladv("attack --out " + (dir_ / "a").string()), 0);
  ASSERT_EQ(sladv("train --config " + config_.string() + " --out " + (dir_ / "b").string()), 0);
  ASSERT_EQ(sladv("attack --out " + (dir_ / "b").string()), 0);
  EXPECT_EQ(slurp(dir_ / "a" / "metrics.csv"), slurp(dir_ / "b" / "metrics.csv"));
  for (const char* f : {"theta1.slnn", "theta2.slnn", "theta3.slnn", "shadow.slnn"}) {
    EXPECT_EQ(slurp(dir_ / "a" / "checkpoints" / f), slurp(dir_ / "b" / "checkpoints" / f)) << f;
  }
  json ra = json::parse(slurp(dir_ / "a" / "report.json"));
  json rb = json::parse(slurp(dir_ / "b" / "report.json"));
  ra.erase("timing");
  rb.erase("timing");
  EXPECT_EQ(ra.dump(), rb.dump());
  EXPECT_EQ(slurp(dir_ / "a" / "adv" / "batch_000.slnn"), slurp(dir_ / "b" / "adv" / "batch_000.slnn"));
}

TEST_F(Cli, AlphaZeroCheckpointsMatchHonest) {
  json honest = json::parse(sladv::testing::tiny_config_json(40));
  honest["shadow"]["enabled"] = false;
  json zero = json::parse(sladv::testing::tiny_config_json(40));
  zero["shadow"]["alpha"] = 0.0;
  ASSERT_EQ(sladv("train --config " + write_config("h.json", honest.dump()).string() + " --out " +
                  (dir_ / "h").string()),
            0);
  ASSERT_EQ(sladv("train --config " + write_config("z.json", zero.dump()).string() + " --out " +
                  (dir_ / "z").string()),
            0);
  for (const char* f : {"theta1.slnn", "theta2.slnn", "theta3.slnn"}) {
    EXPECT_EQ(slurp(dir_ / "h" / "checkpoints" / f), slurp(dir_ / "z" / "checkpoints" / f)) << f;
  }
  EXPECT_FALSE(fs::exists(dir_ / "h" / "checkpoints" / "shadow.slnn"));
}

TEST_F(Cli, ZeroEpsilonGivesZeroDrop) {
  json cfg = json::parse(sladv::testing::tiny_config_json(40));
  cfg["attack"]["epsilon"] = 0.0;
  const auto path = write_config("e0.json", cfg.dump());
  ASSERT_EQ(sladv("train --config " + path.string() + " --out " + (dir_ / "run").string()), 0);
  ASSERT_EQ(sladv("attack --config " + path.string() + " --out " + (dir_ / "run").string()), 0);
  const json report = json::parse(slurp(dir_ / "run" / "report.json"));
  EXPECT_EQ(report["accuracy_drop"].get<double>(), 0.0);
}

TEST_F(Cli, IdenticalShadowCheckpointGivesIdentityProbes) {
  const std::string out = " --out " + (dir_ / "run").string();
  ASSERT_EQ(sladv("train --config " + config_.string() + out), 0);
  fs::copy_file(dir_ / "run" / "checkpoints" / "theta1.slnn", dir_ / "run" / "checkpoints" / "shadow.slnn",
                fs::copy_options::overwrite_existing);
  ASSERT_EQ(sladv("probe" + out), 0);
  const json probes = json::parse(slurp(dir_ / "run" / "probes.json"));
  EXPECT_EQ(probes["d_hat"].get<double>(), 0.0);
  EXPECT_NEAR(probes["alignment_cos"].get<double>(), 1.0, 1e-12);
}

TEST_F(Cli, SeedFlagOverridesConfig) {
  ASSERT_EQ(sladv("train --config " + config_.string() + " --seed 11 --out " + (dir_ / "run").string()), 0);
  const json cfg = json::parse(slurp(dir_ / "run" / "config.json"));
  EXPECT_EQ(cfg["seed"].get<int>(), 11);
}

TEST_F(Cli, SweepWritesVersionedTables) {
  ASSERT_EQ(sladv("sweep --config " + config_.string() + " --param alpha --values 0,1 --seeds 1,2 --out " +
                  (dir_ / "sw").string()),
            0);
  const std::string rows = slurp(dir_ / "sw" / "sweep_alpha.csv");
  EXPECT_EQ(rows.rfind("# sladv-sweep v1\n", 0), 0u);
  EXPECT_EQ(std::count(rows.begin(), rows.end(), '\n'), 2 + 4);
  const std::string summary = slurp(dir_ / "sw" / "sweep_alpha_summary.csv");
  EXPECT_EQ(std::count(summary.begin(), summary.end(), '\n'), 2 + 2);
  EXPECT_EQ(sladv("report --out " + (dir_ / "sw").string()), 0);
}

TEST_F(Cli, SweepValidatesEveryGridPointFirst) {
  EXPECT_EQ(sladv("sweep --config " + config_.string() + " --param epsilon --values 0.1,5 --out " +
                  (dir_ / "sw").string()),
            2);
  EXPECT_FALSE(fs::exists(dir_ / "sw" / "sweep_epsilon.csv"));
}

}  // namespace
