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

#ifndef SLADV_OPTIMIZER_HPP_
#define SLADV_OPTIMIZER_HPP_

#include "sladv/network.hpp"

namespace sladv::nn {

// Classic (heavy-ball) momentum: v <- momentum * v + g; p <- p - lr * v.
// momentum == 0 is plain SGD.
struct OptimizerState {
  ParamGrads velocity;
  double learning_rate = 0.01;
  double momentum = 0.0;

  static OptimizerState for_network(const Network& net, double learning_rate, double momentum);
};

void sgd_momentum_step(Network& net, const ParamGrads& grads, OptimizerState& state);

}  // namespace sladv::nn

#endif  // SLADV_OPTIMIZER_HPP_
