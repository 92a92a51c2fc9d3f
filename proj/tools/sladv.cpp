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

#include <iostream>

#include "CLI11.hpp"
#include "commands.hpp"

int main(int argc, char** argv) {
  using namespace sladv::cli;
  CLI::App app{"Split-learning attack bench"};
  app.require_subcommand(1);

  CommonOptions common;
  SweepOptions sweep;
  std::uint64_t seed = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config_path, "JSON run config");
    sub->add_option("--preset", common.preset, "Named preset (paper-desk)");
    sub->add_option("--seed", seed, "Overrides the config seed");
    sub->add_option("--out", common.out, "Output directory")->capture_default_str();
  };

  auto* train = app.add_subcommand("train", "Train the split model (with the shadow when enabled)");
  auto* attack = app.add_subcommand("attack", "Craft adversarial examples from trained checkpoints");
  auto* probe = app.add_subcommand("probe", "Measure d_hat, alignment, loss sign and transfer cosine");
  auto* sweep_cmd = app.add_subcommand("sweep", "Train and attack over a parameter grid and seeds");
  auto* report = app.add_subcommand("report", "Summarise report.json and sweep tables in --out");
  for (auto* sub : {train, attack, probe, sweep_cmd, report}) add_common(sub);
  sweep_cmd->add_option("--param", sweep.parameter, "alpha, pool, depth or epsilon")
      ->check(CLI::IsMember({"alpha", "pool", "depth", "epsilon"}))
      ->capture_default_str();
  sweep_cmd->add_option("--values", sweep.values, "Grid values (default: shipped grid)")->delimiter(',');
  sweep_cmd->add_option("--seeds", sweep.seeds, "Seeds to run")->delimiter(',')->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }
  for (auto* sub : {train, attack, probe, sweep_cmd, report}) {
    if (sub->get_option("--seed")->count() > 0) common.seed = seed;
  }

  if (*train) return guarded([&] { return cmd_train(common); });
  if (*attack) return guarded([&] { return cmd_attack(common); });
  if (*probe) return guarded([&] { return cmd_probe(common); });
  if (*sweep_cmd) return guarded([&] { return cmd_sweep(common, sweep); });
  return guarded([&] { return cmd_report(common); });
}
