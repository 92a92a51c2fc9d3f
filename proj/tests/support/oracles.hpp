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

#ifndef SLADV_TESTS_ORACLES_HPP_
#define SLADV_TESTS_ORACLES_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sladv/data.hpp"
#include "sladv/network.hpp"
#include "sladv/rng.hpp"
#include "sladv/split.hpp"

namespace sladv::testing {

nn::Tensor random_tensor(const nn::Shape& shape, Rng& rng, double lo = -1.0, double hi = 1.0);

// Straight-loop evaluation of one sample through a layer, written without
// reference to the engine's kernels.
std::vector<double> reference_layer(const nn::LayerSpec& layer, const nn::Shape& in_shape,
                                    const std::vector<double>& x);
nn::Tensor reference_forward(const nn::Network& net, const nn::Tensor& x);

// Largest relative error between backward() and central differences of
// sum(upstream * output), over every parameter and the input.
struct GradientCheck {
  double param_error = 0.0;
  double input_error = 0.0;
  double worst() const { return param_error > input_error ? param_error : input_error; }
};
GradientCheck check_network_gradients(const nn::Network& net, const nn::Tensor& x, const nn::Tensor& upstream);

// Draws an input whose ReLU pre-activations all sit at least `margin` from
// the kink, so central differences never straddle it.
nn::Tensor kink_free_input(const nn::Network& net, std::size_t batch, Rng& rng, double margin = 1e-3);

struct GradientCase {
  std::string name;
  nn::Shape input_shape;
  std::vector<nn::LayerSpec> layers;
};
// One case per layer kind followed by three composed networks.
std::vector<GradientCase> gradient_cases();

struct SuiteResult {
  std::size_t checks = 0;
  double worst_error = 0.0;
  std::string worst_case;
  std::size_t failures = 0;
};
SuiteResult run_gradient_suite(std::size_t seeds, double tolerance);

// Plain monolithic SGD on the unsplit network, batch by batch, replaying the
// split schedule's client order and batch draws.
nn::Network monolithic_train(nn::Network net, const std::vector<data::Dataset>& clients,
                             const split::TrainSchedule& schedule, split::OptimizerSettings optimizer);

// Small conv net and matching data used by the protocol checks.
struct ProtocolFixture {
  nn::Network net;
  std::vector<data::Dataset> clients;
};
ProtocolFixture protocol_fixture(std::uint64_t seed, std::size_t n_clients = 3);

// A run config small enough to train in well under a second.
std::string tiny_config_json(std::size_t iterations = 20);

bool networks_identical(const nn::Network& a, const nn::Network& b);

}  // namespace sladv::testing

#endif  // SLADV_TESTS_ORACLES_HPP_
