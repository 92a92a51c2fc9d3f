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

#ifndef SLADV_SHADOW_HPP_
#define SLADV_SHADOW_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "sladv/data.hpp"
#include "sladv/network.hpp"
#include "sladv/optimizer.hpp"
#include "sladv/split.hpp"

namespace sladv::shadow {

struct ShadowConfig {
  double alpha = 1.0;                    // weight of the similarity gradient
  std::vector<nn::LayerSpec> layers;     // shadow input layers; empty = default
  double learning_rate = 0.01;           // plain SGD
  data::Dataset attacker_pool;           // unlabelled as far as training goes
};

// Two convolutions with a skip connection: conv(in -> C) followed by a
// residual block on C channels, where C and the spatial size come from o_1.
// Throws ConfigError when o_1 is not [C,H,W] with the input's spatial size.
std::vector<nn::LayerSpec> default_shadow_layers(const nn::Shape& input_shape, const nn::Shape& o1_shape);

struct ShadowState {
  nn::Network layers;  // theta_1'
  nn::OptimizerState optimizer;
  data::BatchSampler attacker_sampler;
  std::vector<double> sim_history;  // one L_sim value per round

  // Builds and He-initialises theta_1'. The output shape must equal o_1's.
  static ShadowState create(const ShadowConfig& config, const nn::Shape& input_shape, const nn::Shape& o1_shape,
                            std::uint64_t seed);

  // Mean of sim_history over [begin, end).
  double window_mean(std::size_t begin, std::size_t end) const;
};

struct SimLoss {
  double loss = 0.0;
  nn::Tensor grad_shadow_out;  // dL_sim / d F_theta1'(x')
  nn::Tensor grad_o1;          // g_2 = dL_sim / d o_1
};

// Batch mean of per-sample L2 distances ||shadow_out_i - o1_i||. Samples with
// zero distance contribute zero gradient.
SimLoss sim_loss(const nn::Tensor& shadow_out, const nn::Tensor& o1);

// g = g1 + alpha * g2. alpha == 0 returns g1 unchanged.
nn::Tensor fuse_gradients(const nn::Tensor& g1, const nn::Tensor& g2, double alpha);

// Server that follows the protocol message-for-message but also trains
// theta_1' on L_sim and returns the fused gradient to the clients. theta_2 is
// still updated from dL/do_2 alone.
class MaliciousServer : public split::HonestServer {
 public:
  MaliciousServer(split::Segment& server_layers, ShadowState& state, const ShadowConfig& config);

  split::ProtocolMessage on_activation(const split::ProtocolMessage& o1) override;
  split::ProtocolMessage on_gradient(const split::ProtocolMessage& grad_o2) override;

 private:
  ShadowState& state_;
  const ShadowConfig& config_;
  nn::Tensor g2_;
};

double shadow_round(split::SplitModel& model, ShadowState& state, const ShadowConfig& config, const nn::Tensor& x,
                    std::span<const std::size_t> y, split::Transport* transport = nullptr,
                    std::uint64_t batch_id = 0);

std::vector<split::RoundLog> train_shadow(split::SplitModel& model, ShadowState& state, const ShadowConfig& config,
                                          const std::vector<data::Dataset>& clients,
                                          const split::TrainSchedule& schedule, split::Transport* transport = nullptr,
                                          const split::RoundCallback& on_round = {});

}  // namespace sladv::shadow

#endif  // SLADV_SHADOW_HPP_
