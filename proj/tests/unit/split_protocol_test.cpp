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
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "sladv/errors.hpp"
#include "sladv/loss.hpp"
#include "sladv/split.hpp"

namespace sladv::split {
namespace {

using nn::LayerSpec;
using nn::Network;
using nn::Tensor;

Network four_layer_net() {
  Network net({4}, {LayerSpec::dense(4, 5), LayerSpec::relu(), LayerSpec::dense(5, 3), LayerSpec::dense(3, 2)});
  Rng rng(1);
  nn::initialize(net, rng);
  return net;
}

TEST(Partition, SegmentCounts) {
  SplitModel m = partition(four_layer_net(), {1, 2, 1});
  EXPECT_EQ(m.input.net.layer_count(), 1u);
  EXPECT_EQ(m.server.net.layer_count(), 2u);
  EXPECT_EQ(m.output.net.layer_count(), 1u);
  EXPECT_EQ(m.input.owner, Owner::client);
  EXPECT_EQ(m.server.owner, Owner::server);
  EXPECT_EQ(m.output.owner, Owner::client);
}

TEST(Partition, EighteenLayerResidualNet) {
  std::vector<LayerSpec> layers{LayerSpec::conv2d(1, 2, 3, 1, 1), LayerSpec::relu()};
  for (int i = 0; i < 14; ++i) layers.push_back(LayerSpec::residual_block(2));
  layers.push_back(LayerSpec::flatten());
  layers.push_back(LayerSpec::dense(32, 10));
  SplitModel m = partition(Network({1, 4, 4}, layers), {2, 15, 1});
  EXPECT_EQ(m.input.net.layer_count(), 2u);
  EXPECT_EQ(m.server.net.layer_count(), 15u);
  EXPECT_EQ(m.output.net.layer_count(), 1u);
}

TEST(Partition, CountMismatchIsConfigError) {
  EXPECT_THROW(partition(four_layer_net(), {2, 3, 1}), ConfigError);
  EXPECT_THROW(partition(four_layer_net(), {0, 3, 1}), ConfigError);
}

TEST(Partition, ParametersAreMovedIntact) {
  const Network original = four_layer_net();
  SplitModel m = partition(Network(original), {1, 2, 1});
  EXPECT_TRUE(m.assemble() == original);
}

TEST(HonestRound, HandComputedScalarLoss) {
  auto scalar = [](std::size_t in, std::size_t out, std::vector<double> w) {
    LayerSpec d = LayerSpec::dense(in, out);
    d.params = {Tensor({out, in}, std::move(w)), Tensor({out}, std::vector<double>(out, 0.0))};
    return d;
  };
  Network net({1}, {scalar(1, 1, {2.0}), scalar(1, 1, {3.0}), scalar(1, 2, {1.0, -1.0})});
  SplitModel m = partition(std::move(net), {1, 1, 1}, {0.0, 0.0});
  const std::vector<std::size_t> y{0};
  const double loss = honest_round(m, Tensor({1, 1}, {1.0}), y);
  // logits (6, -6): loss = log(1 + e^-12)
  EXPECT_NEAR(loss, std::log1p(std::exp(-12.0)), 1e-15);
}

TEST(HonestRound, ZeroLearningRateLeavesParameters) {
  auto f = testing::protocol_fixture(2);
  const Network before = f.net;
  SplitModel m = partition(std::move(f.net), {2, 2, 2}, {0.0, 0.9});
  const auto idx = std::vector<std::size_t>{0, 1, 2};
  const Tensor x = f.clients[0].batch_images(idx);
  const auto y = f.clients[0].batch_labels(idx);
  const double loss = honest_round(m, x, y);
  EXPECT_TRUE(m.assemble() == before);
  EXPECT_EQ(loss, nn::softmax_cross_entropy(nn::infer(before, x), y).loss);
}

TEST(HonestRound, ExactlyFourMessagesInOrder) {
  auto f = testing::protocol_fixture(3);
  SplitModel m = partition(std::move(f.net), {2, 2, 2});
  Transport t(true);
  const auto idx = std::vector<std::size_t>{0, 1};
  honest_round(m, f.clients[0].batch_images(idx), f.clients[0].batch_labels(idx), &t, 7);
  ASSERT_EQ(t.trace().size(), 4u);
  EXPECT_TRUE(t.idle());
  const auto& tr = t.trace();
  EXPECT_EQ(tr[0].direction, Direction::client_to_server);
  EXPECT_EQ(tr[0].kind, MessageKind::activation);
  EXPECT_EQ(tr[1].direction, Direction::server_to_client);
  EXPECT_EQ(tr[1].kind, MessageKind::activation);
  EXPECT_EQ(tr[2].direction, Direction::client_to_server);
  EXPECT_EQ(tr[2].kind, MessageKind::gradient);
  EXPECT_EQ(tr[3].direction, Direction::server_to_client);
  EXPECT_EQ(tr[3].kind, MessageKind::gradient);
  EXPECT_EQ(tr[3].shape, tr[0].shape);
  EXPECT_EQ(tr[2].shape, tr[1].shape);
  for (const auto& r : tr) EXPECT_EQ(r.round, 7u);
}

TEST(TrainHonest, BatchIdsIncrease) {
  auto f = testing::protocol_fixture(4);
  SplitModel m = partition(std::move(f.net), {2, 2, 2});
  Transport t(true);
  train_honest(m, f.clients, {.iterations = 6, .batch_size = 4, .seed = 1}, &t);
  ASSERT_EQ(t.trace().size(), 24u);
  for (std::size_t i = 4; i < t.trace().size(); ++i) {
    EXPECT_EQ(t.trace()[i].round, t.trace()[i - 4].round + 1);
  }
}

TEST(TrainHonest, ZeroIterationsLeavesModel) {
  auto f = testing::protocol_fixture(5);
  const Network before = f.net;
  SplitModel m = partition(std::move(f.net), {2, 2, 2});
  EXPECT_TRUE(train_honest(m, f.clients, {.iterations = 0, .batch_size = 4, .seed = 1}).empty());
  EXPECT_TRUE(m.assemble() == before);
}

TEST(TrainHonest, EmptyDatasetIsInputError) {
  auto f = testing::protocol_fixture(6);
  SplitModel m = partition(std::move(f.net), {2, 2, 2});
  EXPECT_THROW(train_honest(m, {}, {.iterations = 1, .batch_size = 4, .seed = 1}), InputError);
  std::vector<data::Dataset> with_empty{f.clients[0], data::Dataset{}};
  EXPECT_THROW(train_honest(m, with_empty, {.iterations = 1, .batch_size = 4, .seed = 1}), InputError);
}

TEST(TrainHonest, RoundRobinClients) {
  auto f = testing::protocol_fixture(7);
  SplitModel m = partition(std::move(f.net), {2, 2, 2});
  const auto log = train_honest(m, f.clients, {.iterations = 7, .batch_size = 4, .seed = 1});
  for (const auto& r : log) EXPECT_EQ(r.client, r.round % f.clients.size());
}

// The protocol must reproduce monolithic SGD bit for bit.
TEST(TrainHonest, BitIdenticalToMonolithicTraining) {
  const std::vector<SplitPlan> plans{{1, 4, 1}, {2, 2, 2}, {3, 2, 1}};
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    for (const auto& plan : plans) {
      auto f = testing::protocol_fixture(seed);
      const TrainSchedule schedule{.iterations = 20, .batch_size = 4, .seed = seed};
      const OptimizerSettings opt{0.05, 0.9};
      const Network mono = testing::monolithic_train(f.net, f.clients, schedule, opt);
      SplitModel m = partition(std::move(f.net), plan, opt);
      train_honest(m, f.clients, schedule);
      EXPECT_TRUE(testing::networks_identical(m.assemble(), mono)) << "seed " << seed;
    }
  }
}

TEST(TrainHonest, SingleClientMatchesMonolithicSgd) {
  auto f = testing::protocol_fixture(8, 1);
  const TrainSchedule schedule{.iterations = 15, .batch_size = 3, .seed = 4};
  const Network mono = testing::monolithic_train(f.net, f.clients, schedule, {0.1, 0.0});
  SplitModel m = partition(std::move(f.net), {2, 3, 1}, {0.1, 0.0});
  train_honest(m, f.clients, schedule);
  EXPECT_TRUE(testing::networks_identical(m.assemble(), mono));
}

TEST(TrainHonest, DeterministicUnderSeed) {
  auto a = testing::protocol_fixture(9);
  auto b = testing::protocol_fixture(9);
  SplitModel ma = partition(std::move(a.net), {2, 2, 2});
  SplitModel mb = partition(std::move(b.net), {2, 2, 2});
  const auto la = train_honest(ma, a.clients, {.iterations = 12, .batch_size = 4, .seed = 3});
  const auto lb = train_honest(mb, b.clients, {.iterations = 12, .batch_size = 4, .seed = 3});
  EXPECT_TRUE(testing::networks_identical(ma.assemble(), mb.assemble()));
  for (std::size_t i = 0; i < la.size(); ++i) EXPECT_EQ(la[i].task_loss, lb[i].task_loss);
}

TEST(TraceLog, LineFormat) {
  std::ostringstream out;
  write_trace_line(out, {3, Direction::server_to_client, MessageKind::gradient, {2, 4}, 0xabc});
  EXPECT_EQ(out.str(),
            "{\"round\":3,\"direction\":\"server->client\",\"kind\":\"gradient\",\"shape\":[2,4],\"checksum\":\"abc\"}\n");
}

TEST(Transport, ReceiveOnEmptyQueueIsInternalError) {
  Transport t;
  EXPECT_THROW(t.receive(Direction::client_to_server), InternalError);
}

}  // namespace
}  // namespace sladv::split
