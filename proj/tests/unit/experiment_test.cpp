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

#include <cmath>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "sladv/errors.hpp"
#include "sladv/experiment.hpp"

namespace sladv::experiment {
namespace {

std::string field_of(const std::string& json_text) {
  try {
    parse_config(json_text);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "<accepted>";
}

TEST(Preset, DeskDefaults) {
  const RunConfig c = preset("paper-desk");
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.attack.epsilon, 0.3);
  EXPECT_EQ(c.attack.beta, 0.3);
  EXPECT_EQ(c.attack.iterations, 1u);
  EXPECT_EQ(c.shadow.alpha, 1.0);
  EXPECT_EQ(c.shadow.learning_rate, 0.01);
  EXPECT_EQ(c.training.optimizer.learning_rate, 0.01);
  EXPECT_EQ(c.training.iterations, 3000u);
  EXPECT_EQ(c.training.optimizer.momentum, 0.0);
  EXPECT_EQ(c.model.split.n_input, 2u);
  EXPECT_EQ(c.model.split.n_output, 1u);
  EXPECT_EQ(c.training.batch_size, 32u);
  EXPECT_EQ(c.training.partition.n_clients, 10u);
  EXPECT_EQ(c.training.partition.client_fraction, 0.8);
  EXPECT_EQ(c.training.partition.attacker_pool_size, 2048u);
  EXPECT_THROW(preset("cifar"), ConfigError);
  EXPECT_EQ(preset_names(), std::vector<std::string>{"paper-desk"});
}

TEST(ParseConfig, EmptyObjectIsThePreset) {
  EXPECT_EQ(config_to_json(parse_config("{}")), config_to_json(preset("paper-desk")));
}

TEST(ParseConfig, RoundTrip) {
  const RunConfig c = parse_config(testing::tiny_config_json());
  EXPECT_EQ(config_to_json(parse_config(config_to_json(c))), config_to_json(c));
}

TEST(ParseConfig, OverlaysFields) {
  const RunConfig c = parse_config(R"({"seed": 9, "shadow": {"alpha": 10}, "attack": {"epsilon": 0.1, "step": "gradient"}})");
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.shadow.alpha, 10.0);
  EXPECT_EQ(c.attack.epsilon, 0.1);
  EXPECT_EQ(c.attack.step, attack::StepRule::gradient);
  EXPECT_EQ(c.attack.beta, 0.3);
}

TEST(ParseConfig, ErrorsCarryFieldPaths) {
  EXPECT_EQ(field_of("{"), "<root>");
  EXPECT_EQ(field_of("[]"), "<root>");
  EXPECT_EQ(field_of(R"({"bogus": 1})"), "bogus");
  EXPECT_EQ(field_of(R"({"preset": "nope"})"), "preset");
  EXPECT_EQ(field_of(R"({"shadow": {"alpha": -1}})"), "shadow.alpha");
  EXPECT_EQ(field_of(R"({"shadow": {"alpha": "big"}})"), "shadow.alpha");
  EXPECT_EQ(field_of(R"({"shadow": {"attacker": {"pool_size": 0}}})"), "shadow.attacker.pool_size");
  EXPECT_EQ(field_of(R"({"shadow": {"attacker": {"source": "moon"}}})"), "shadow.attacker.source");
  EXPECT_EQ(field_of(R"({"model": {"split": [1, 1]}})"), "model.split");
  EXPECT_EQ(field_of(R"({"model": {"split": [1, 1, 1]}})"), "model.split");
  EXPECT_EQ(field_of(R"({"model": {"layers": [{"kind": "lstm"}]}})"), "model.layers[0].kind");
  EXPECT_EQ(field_of(R"({"model": {"layers": [{"kind": "relu", "units": 3}]}})"), "model.layers[0].units");
  EXPECT_EQ(field_of(R"({"training": {"momentum": 1.0}})"), "training.momentum");
  EXPECT_EQ(field_of(R"({"training": {"batch_size": 0}})"), "training.batch_size");
  EXPECT_EQ(field_of(R"({"training": {"partition": {"scheme": "zipf"}}})"), "training.partition.scheme");
  EXPECT_EQ(field_of(R"({"attack": {"epsilon": 2}})"), "attack.epsilon");
  EXPECT_EQ(field_of(R"({"attack": {"iterations": 0}})"), "attack.iterations");
  EXPECT_EQ(field_of(R"({"attack": {"input_range": [1, 0]}})"), "attack.input_range");
  EXPECT_EQ(field_of(R"({"attack": {"step": "pgd"}})"), "attack.step");
  EXPECT_EQ(field_of(R"({"task": {"synth": {"generator": "noise"}}})"), "task.synth.generator");
  EXPECT_EQ(field_of(R"({"probes": {"alignment_samples": 0}})"), "probes.alignment_samples");
}

TEST(WithInputDepth, MovesLayersBetweenClientAndServer) {
  const RunConfig base = preset("paper-desk");
  const std::size_t total = base.model.layers.size();
  for (std::size_t d = 1; d <= 3; ++d) {
    const RunConfig c = with_input_depth(base, d);
    EXPECT_EQ(c.model.split.n_input, d);
    EXPECT_EQ(c.model.split.n_output, base.model.split.n_output);
    EXPECT_EQ(c.model.split.total(), total);
    EXPECT_NO_THROW(c.validate());
  }
  EXPECT_THROW(with_input_depth(base, 0), ConfigError);
  EXPECT_THROW(with_input_depth(base, total), ConfigError);
}

TEST(StreamSeed, DistinctPerStream) {
  const RunConfig c = preset("paper-desk");
  EXPECT_NE(stream_seed(c, Stream::train_data), stream_seed(c, Stream::test_data));
  EXPECT_NE(stream_seed(c, Stream::init), stream_seed(c, Stream::shadow));
}

TEST(BuildTask, DeterministicAndDisjoint) {
  const RunConfig c = parse_config(testing::tiny_config_json());
  const Task a = build_task(c);
  const Task b = build_task(c);
  EXPECT_EQ(a.train.images, b.train.images);
  EXPECT_EQ(a.test.images, b.test.images);
  EXPECT_FALSE(a.train.images == a.test.images);
  EXPECT_EQ(a.partition.clients.size(), 3u);
  EXPECT_EQ(a.partition.attacker_pool.size(), 32u);
}

TEST(Train, DeterministicUnderSeed) {
  const RunConfig c = parse_config(testing::tiny_config_json(30));
  const Task task = build_task(c);
  const TrainedRun a = train(c, task);
  const TrainedRun b = train(c, task);
  EXPECT_TRUE(testing::networks_identical(a.model.assemble(), b.model.assemble()));
  EXPECT_EQ(a.sim_history(), b.sim_history());
  EXPECT_FALSE(a.diverged_at.has_value());
}

TEST(Train, AlphaZeroMatchesHonestRun) {
  RunConfig honest = parse_config(testing::tiny_config_json(30));
  honest.shadow.enabled = false;
  RunConfig shadowed = parse_config(testing::tiny_config_json(30));
  shadowed.shadow.alpha = 0.0;
  const TrainedRun h = train(honest, build_task(honest));
  const TrainedRun s = train(shadowed, build_task(shadowed));
  EXPECT_FALSE(h.shadow.has_value());
  ASSERT_TRUE(s.shadow.has_value());
  EXPECT_TRUE(testing::networks_identical(h.model.assemble(), s.model.assemble()));
  EXPECT_EQ(s.sim_history().size(), 30u);
}

TEST(Train, ZeroIterationsKeepsInitialisation) {
  const RunConfig c = parse_config(testing::tiny_config_json(0));
  const TrainedRun r = train(c, build_task(c));
  nn::Network init = build_network(c);
  Rng rng(stream_seed(c, Stream::init));
  nn::initialize(init, rng);
  EXPECT_TRUE(testing::networks_identical(r.model.assemble(), init));
}

TEST(Train, ReportsDivergence) {
  RunConfig c = parse_config(testing::tiny_config_json(40));
  c.training.optimizer.learning_rate = 1e12;
  const TrainedRun r = train(c, build_task(c));
  ASSERT_TRUE(r.diverged_at.has_value());
  EXPECT_LE(*r.diverged_at, 40u);
}

TEST(Run, ReportInvariants) {
  const RunConfig c = parse_config(testing::tiny_config_json(40));
  const Outcome o = run(c);
  EXPECT_NEAR(o.attack.accuracy_drop, 100.0 * (o.attack.clean_accuracy - o.attack.adversarial_accuracy), 1e-9);
  EXPECT_GE(o.probes.d_hat, 0.0);
  EXPECT_GE(o.probes.sign_fraction, 0.0);
  EXPECT_LE(o.probes.sign_fraction, 1.0);
  EXPECT_GE(o.probes.alignment_cos, -1.0);
  EXPECT_LE(o.probes.alignment_cos, 1.0);
  EXPECT_TRUE(std::isfinite(o.probes.transfer_cos));
}

TEST(Metrics, CsvRoundTrip) {
  const std::vector<split::RoundLog> rounds{{0, 0, 2.5}, {1, 1, 2.25}};
  const std::vector<double> sim{0.75, 0.1 + 0.2};
  std::stringstream buf;
  write_metrics_csv(buf, rounds, sim);
  EXPECT_EQ(buf.str().substr(0, kMetricsHeader.size()), kMetricsHeader);
  EXPECT_EQ(read_sim_series(buf), sim);

  std::stringstream honest;
  write_metrics_csv(honest, rounds, {});
  EXPECT_TRUE(read_sim_series(honest).empty());
}

TEST(Report, TimingIsSeparable) {
  RunReport r;
  r.seed = 4;
  r.train_seconds = 1.5;
  const std::string with = report_to_json(r, true);
  const std::string without = report_to_json(r, false);
  EXPECT_NE(with.find("timing"), std::string::npos);
  EXPECT_EQ(without.find("timing"), std::string::npos);
  r.train_seconds = 99.0;
  EXPECT_EQ(report_to_json(r, false), without);
}

}  // namespace
}  // namespace sladv::experiment
