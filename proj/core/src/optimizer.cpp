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

#include "sladv/optimizer.hpp"

#include "sladv/errors.hpp"

namespace sladv::nn {

OptimizerState OptimizerState::for_network(const Network& net, double learning_rate, double momentum) {
  if (!(learning_rate >= 0.0)) throw ConfigError("learning rate must be non-negative");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must lie in [0, 1)");
  return OptimizerState{net.zero_grads(), learning_rate, momentum};
}

void sgd_momentum_step(Network& net, const ParamGrads& grads, OptimizerState& state) {
  if (grads.size() != net.layer_count() || state.velocity.size() != net.layer_count()) {
    throw ConfigError("gradient/velocity layout does not match the network");
  }
  for (std::size_t i = 0; i < net.layer_count(); ++i) {
    auto& params = net.params(i);
    if (grads[i].size() != params.size() || state.velocity[i].size() != params.size()) {
      throw ConfigError("gradient/velocity layout does not match layer " + std::to_string(i));
    }
    for (std::size_t p = 0; p < params.size(); ++p) {
      Tensor& param = params[p];
      const Tensor& g = grads[i][p];
      Tensor& v = state.velocity[i][p];
      if (g.shape() != param.shape() || v.shape() != param.shape()) {
        throw ConfigError("gradient shape " + shape_string(g.shape()) + " does not match parameter " +
                          shape_string(param.shape()));
      }
      for (std::size_t k = 0; k < param.size(); ++k) {
        v[k] = state.momentum * v[k] + g[k];
        param[k] -= state.learning_rate * v[k];
      }
    }
  }
}

}  // namespace sladv::nn
