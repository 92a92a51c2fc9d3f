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

#include <benchmark/benchmark.h>

#include "sladv/attack.hpp"
#include "sladv/experiment.hpp"
#include "sladv/network.hpp"
#include "sladv/rng.hpp"
#include "sladv/split.hpp"

namespace {

using namespace sladv;

nn::Tensor uniform_batch(const nn::Shape& image, std::size_t n, Rng& rng) {
  nn::Shape shape{n};
  shape.insert(shape.end(), image.begin(), image.end());
  nn::Tensor t(shape);
  for (double& v : t.data()) v = rng.uniform();
  return t;
}

nn::Network desk_network() {
  const auto c = experiment::preset("paper-desk");
  nn::Network net = experiment::build_network(c);
  Rng rng(1);
  nn::initialize(net, rng);
  return net;
}

void BM_ConvForward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  nn::Network net({8, 12, 12}, {nn::LayerSpec::conv2d(8, 8, 3, 1, 1)});
  Rng rng(2);
  nn::initialize(net, rng);
  const nn::Tensor x = uniform_batch({8, 12, 12}, n, rng);
  for (auto _ : state) benchmark::DoNotOptimize(nn::forward(net, x));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_ConvForward)->Arg(1)->Arg(32);

void BM_ConvBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  nn::Network net({8, 12, 12}, {nn::LayerSpec::conv2d(8, 8, 3, 1, 1)});
  Rng rng(3);
  nn::initialize(net, rng);
  const nn::Tensor x = uniform_batch({8, 12, 12}, n, rng);
  const auto trace = nn::forward(net, x);
  const nn::Tensor up = uniform_batch({8, 12, 12}, n, rng);
  for (auto _ : state) benchmark::DoNotOptimize(nn::backward(net, trace, up));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_ConvBackward)->Arg(1)->Arg(32);

void BM_DeskForward(benchmark::State& state) {
  const nn::Network net = desk_network();
  Rng rng(4);
  const nn::Tensor x = uniform_batch(net.input_shape(), 32, rng);
  for (auto _ : state) benchmark::DoNotOptimize(nn::forward(net, x));
}
BENCHMARK(BM_DeskForward);

void BM_HonestRound(benchmark::State& state) {
  const auto c = experiment::preset("paper-desk");
  split::SplitModel model = split::partition(desk_network(), c.model.split, c.training.optimizer);
  Rng rng(5);
  const nn::Tensor x = uniform_batch(model.input.net.input_shape(), 32, rng);
  std::vector<std::size_t> y(32);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = i % 10;
  for (auto _ : state) benchmark::DoNotOptimize(split::honest_round(model, x, y));
}
BENCHMARK(BM_HonestRound);

void BM_Craft(benchmark::State& state) {
  const nn::Network net = desk_network();
  const auto c = experiment::preset("paper-desk");
  split::SplitModel model = split::partition(nn::Network(net), c.model.split, c.training.optimizer);
  const nn::Pipeline proxy{&model.input.net, &model.server.net};
  Rng rng(6);
  const nn::Tensor x = uniform_batch(net.input_shape(), 250, rng);
  for (auto _ : state) benchmark::DoNotOptimize(attack::craft(proxy, x, c.attack));
}
BENCHMARK(BM_Craft);

}  // namespace
BENCHMARK_MAIN();
