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

#include "sladv/shadow.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "sladv/errors.hpp"

namespace sladv::shadow {

std::vector<nn::LayerSpec> default_shadow_layers(const nn::Shape& input_shape, const nn::Shape& o1_shape) {
  if (input_shape.size() != 3 || o1_shape.size() != 3 || input_shape[1] != o1_shape[1] ||
      input_shape[2] != o1_shape[2]) {
    throw ConfigError("the default shadow layers need o_1 of shape [C,H,W] matching the input's spatial size; got " +
                      nn::shape_string(o1_shape) + " for input " + nn::shape_string(input_shape));
  }
  const std::size_t channels = o1_shape[0];
  return {nn::LayerSpec::conv2d(input_shape[0], channels, 3, 1, 1), nn::LayerSpec::residual_block(channels, 3)};
}

ShadowState ShadowState::create(const ShadowConfig& config, const nn::Shape& input_shape, const nn::Shape& o1_shape,
                                std::uint64_t seed) {
  if (!(config.alpha >= 0.0)) throw ConfigError("alpha must be non-negative", "shadow.alpha");
  if (!(config.learning_rate > 0.0)) throw ConfigError("shadow learning rate must be positive", "shadow.learning_rate");
  if (config.attacker_pool.size() == 0) throw InputError("the attacker pool is empty");
  if (config.attacker_pool.image_shape() != input_shape) {
    throw ConfigError("attacker images " + nn::shape_string(config.attacker_pool.image_shape()) +
                      " do not match the model input " + nn::shape_string(input_shape));
  }
  auto layers = config.layers.empty() ? default_shadow_layers(input_shape, o1_shape) : config.layers;
  nn::Network net(input_shape, std::move(layers));
  if (net.output_shape() != o1_shape) {
    throw ConfigError("shadow output " + nn::shape_string(net.output_shape()) + " does not match o_1 " +
                      nn::shape_string(o1_shape),
                      "shadow.layers");
  }
  Rng rng(seed);
  nn::initialize(net, rng);
  auto optimizer = nn::OptimizerState::for_network(net, config.learning_rate, 0.0);
  return ShadowState{std::move(net), std::move(optimizer),
                     data::BatchSampler(config.attacker_pool.size(), 1, Rng::derive(seed, 7)), {}};
}

double ShadowState::window_mean(std::size_t begin, std::size_t end) const {
  if (end > sim_history.size() || begin >= end) throw InputError("empty L_sim window");
  double acc = 0.0;
  for (std::size_t i = begin; i < end; ++i) acc += sim_history[i];
  return acc / static_cast<double>(end - begin);
}

SimLoss sim_loss(const nn::Tensor& shadow_out, const nn::Tensor& o1) {
  if (shadow_out.shape() != o1.shape() || o1.rank() < 1) {
    throw ConfigError("shadow output " + nn::shape_string(shadow_out.shape()) + " does not match o_1 " +
                      nn::shape_string(o1.shape()));
  }
  SimLoss out{0.0, nn::Tensor(o1.shape()), nn::Tensor(o1.shape())};
  const std::size_t batch = o1.batch();
  const double scale = 1.0 / static_cast<double>(batch);
  for (std::size_t n = 0; n < batch; ++n) {
    auto s = shadow_out.sample(n);
    auto o = o1.sample(n);
    double sq = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) sq += (s[i] - o[i]) * (s[i] - o[i]);
    const double dist = std::sqrt(sq);
    out.loss += dist;
    if (dist == 0.0) continue;
    auto gs = out.grad_shadow_out.sample(n);
    auto go = out.grad_o1.sample(n);
    for (std::size_t i = 0; i < s.size(); ++i) {
      gs[i] = scale * (s[i] - o[i]) / dist;
      go[i] = -gs[i];
    }
  }
  out.loss *= scale;
  return out;
}

nn::Tensor fuse_gradients(const nn::Tensor& g1, const nn::Tensor& g2, double alpha) {
  if (g1.shape() != g2.shape()) {
    throw InternalError("cannot fuse gradients of shapes " + nn::shape_string(g1.shape()) + " and " +
                        nn::shape_string(g2.shape()));
  }
  if (alpha == 0.0) return g1;
  nn::Tensor g(g1.shape());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = g1[i] + alpha * g2[i];
  return g;
}

MaliciousServer::MaliciousServer(split::Segment& server_layers, ShadowState& state, const ShadowConfig& config)
    : HonestServer(server_layers), state_(state), config_(config) {}

split::ProtocolMessage MaliciousServer::on_activation(const split::ProtocolMessage& o1) {
  split::ProtocolMessage reply = HonestServer::on_activation(o1);

  // x' ~ D_2, drawn independently of the clients' batch and size-matched.
  const auto idx = state_.attacker_sampler.next(o1.payload.batch());
  const nn::Tensor x_prime = config_.attacker_pool.batch_images(idx);
  const nn::ActivationTrace trace = nn::forward(state_.layers, x_prime);
  SimLoss sim = sim_loss(trace.output, o1.payload);
  auto grads = nn::backward(state_.layers, trace, sim.grad_shadow_out, {.param_grads = true, .input_grad = false});
  nn::sgd_momentum_step(state_.layers, grads.param_grads, state_.optimizer);
  state_.sim_history.push_back(sim.loss);
  g2_ = std::move(sim.grad_o1);
  return reply;
}

split::ProtocolMessage MaliciousServer::on_gradient(const split::ProtocolMessage& grad_o2) {
  const std::uint64_t id = grad_o2.batch_id;
  nn::Tensor g1 = backward_and_update(grad_o2);
  nn::Tensor g = fuse_gradients(g1, g2_, config_.alpha);
  g2_ = {};
  return {split::Direction::server_to_client, split::MessageKind::gradient, id, std::move(g)};
}

double shadow_round(split::SplitModel& model, ShadowState& state, const ShadowConfig& config, const nn::Tensor& x,
                    std::span<const std::size_t> y, split::Transport* transport, std::uint64_t batch_id) {
  MaliciousServer server(model.server, state, config);
  split::Transport local;
  return split::run_round(model, server, transport ? *transport : local, x, y, batch_id);
}

std::vector<split::RoundLog> train_shadow(split::SplitModel& model, ShadowState& state, const ShadowConfig& config,
                                          const std::vector<data::Dataset>& clients,
                                          const split::TrainSchedule& schedule, split::Transport* transport,
                                          const split::RoundCallback& on_round) {
  MaliciousServer server(model.server, state, config);
  return split::train(model, server, clients, schedule, transport, on_round);
}

}  // namespace sladv::shadow
