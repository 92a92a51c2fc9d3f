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

#ifndef SLADV_EXPERIMENT_HPP_
#define SLADV_EXPERIMENT_HPP_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sladv/attack.hpp"
#include "sladv/data.hpp"
#include "sladv/probes.hpp"
#include "sladv/shadow.hpp"
#include "sladv/split.hpp"

namespace sladv::experiment {

struct TaskConfig {
  std::string source = "synth";  // "synth" or "idx"
  data::SynthSpec synth;
  std::size_t test_samples_per_class = 100;
  // IDX sources; test files are optional.
  std::string train_images, train_labels, test_images, test_labels;
};

struct ModelConfig {
  nn::Shape input_shape;
  std::vector<nn::LayerSpec> layers;
  split::SplitPlan split;
};

struct TrainingConfig {
  std::size_t iterations = 3000;
  split::OptimizerSettings optimizer;
  std::size_t batch_size = 32;
  data::PartitionPlan partition;  // seed is derived from the run seed
};

struct ShadowSettings {
  bool enabled = true;
  double alpha = 1.0;
  std::vector<nn::LayerSpec> layers;  // empty = default shadow layers
  double learning_rate = 0.01;
};

struct ProbeSettings {
  bool output_distance = true;
  bool alignment = true;
  bool loss_sign = true;
  bool transfer = true;
  std::size_t alignment_samples = 200;
};

struct RunConfig {
  TaskConfig task;
  ModelConfig model;
  TrainingConfig training;
  ShadowSettings shadow;
  attack::AttackConfig attack;
  ProbeSettings probes;
  std::uint64_t seed = 0;

  // Checks every section without doing any work. Throws ConfigError whose
  // field() is the offending path, e.g. "model.split".
  void validate() const;
};

std::vector<std::string> preset_names();
RunConfig preset(std::string_view name);  // throws ConfigError

// JSON config. Keys absent from the document keep the values of the preset
// named by its "preset" key (default "paper-desk"). Unknown keys are errors.
RunConfig parse_config(std::string_view json_text);
std::string config_to_json(const RunConfig& config);

// Layer count of the client input segment swapped for `n_input`, keeping the
// output segment fixed.
RunConfig with_input_depth(RunConfig config, std::size_t n_input);

// Named seed streams derived from the run seed.
enum class Stream : std::uint64_t {
  train_data = 11,
  test_data = 12,
  init = 13,
  partition = 14,
  schedule = 15,
  shadow = 16,
  noise = 17,
};
std::uint64_t stream_seed(const RunConfig& config, Stream stream);

struct Task {
  data::Dataset train;
  data::Dataset test;
  data::Partition partition;
};

Task build_task(const RunConfig& config);
nn::Network build_network(const RunConfig& config);

struct TrainedRun {
  split::SplitModel model;
  std::optional<shadow::ShadowState> shadow;
  std::vector<split::RoundLog> rounds;
  double seconds = 0.0;
  // First round whose task loss or L_sim was not finite, or the round count
  // when only the final parameters are. Empty for a healthy run.
  std::optional<std::size_t> diverged_at;

  const std::vector<double>& sim_history() const;
};

// Honest training when the shadow is disabled, Algorithm-1 training otherwise.
TrainedRun train(const RunConfig& config, const Task& task, split::Transport* transport = nullptr);

struct RunReport {
  std::uint64_t seed = 0;
  attack::AttackReport attack;
  std::optional<probes::ProbeReport> probes;
  std::vector<double> sim_series;
  std::optional<std::size_t> diverged_at;
  std::string config_json;
  // Wall-clock seconds, kept apart from everything else so reports compare
  // byte-for-byte once this field is dropped.
  double train_seconds = 0.0;
  double attack_seconds = 0.0;
};

struct Evaluation {
  attack::AttackReport attack;
  probes::ProbeReport probes;
  std::vector<attack::AdversarialBatch> adversarial;
  double seconds = 0.0;
};

// Attack and probes against trained segments. `keep_adversarial` retains the
// crafted batches.
Evaluation evaluate(const RunConfig& config, const Task& task, const nn::Network& theta1, const nn::Network& theta2,
                    const nn::Network& theta3, const nn::Network& theta1p, bool keep_adversarial = false);
probes::ProbeReport run_probes(const RunConfig& config, const Task& task, const nn::Network& theta1,
                               const nn::Network& theta2, const nn::Network& theta3, const nn::Network& theta1p,
                               const std::vector<attack::AdversarialBatch>* adversarial);

// Train, attack and probe in one go; what sweeps and acceptance runs need.
struct Outcome {
  attack::AttackReport attack;
  probes::ProbeReport probes;
  double first_sim = 0.0;  // mean L_sim over the first and last 100 rounds
  double last_sim = 0.0;
  double train_seconds = 0.0;
  double eval_seconds = 0.0;
  std::optional<std::size_t> diverged_at;
};
Outcome run(const RunConfig& config);

std::string report_to_json(const RunReport& report, bool include_timing = true);

// "# sladv-metrics v1" header, then round,task_loss,L_sim rows. L_sim is
// empty for honest runs.
inline constexpr std::string_view kMetricsHeader = "# sladv-metrics v1";
void write_metrics_csv(std::ostream& out, const std::vector<split::RoundLog>& rounds,
                       const std::vector<double>& sim_history);
// Reads back the L_sim column (rows without a value are skipped).
std::vector<double> read_sim_series(std::istream& in);

}  // namespace sladv::experiment

#endif  // SLADV_EXPERIMENT_HPP_
