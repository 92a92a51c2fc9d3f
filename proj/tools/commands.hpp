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

#ifndef SLADV_TOOLS_COMMANDS_HPP_
#define SLADV_TOOLS_COMMANDS_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sladv/experiment.hpp"

namespace sladv::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kConfig = 2,
  kIo = 3,
  kMissingArtifact = 4,
};

struct CommonOptions {
  std::string config_path;
  std::string preset;
  std::optional<std::uint64_t> seed;
  std::filesystem::path out = "run";
};

// --config wins over --preset; without either, a config.json left in --out
// by an earlier train is reused, and failing that the paper-desk preset.
experiment::RunConfig resolve_config(const CommonOptions& options);

struct SweepOptions {
  std::string parameter = "alpha";  // alpha | pool | depth | epsilon
  std::vector<double> values;       // empty = the shipped grid
  std::vector<std::uint64_t> seeds{1};
};

std::vector<double> default_sweep_values(const std::string& parameter);

int cmd_train(const CommonOptions& options);
int cmd_attack(const CommonOptions& options);
int cmd_probe(const CommonOptions& options);
int cmd_sweep(const CommonOptions& options, const SweepOptions& sweep);
int cmd_report(const CommonOptions& options);

// Maps library exceptions onto exit codes and prints them to stderr.
int guarded(const std::function<int()>& body);

}  // namespace sladv::cli

#endif  // SLADV_TOOLS_COMMANDS_HPP_
