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

#ifndef SLADV_LOSS_HPP_
#define SLADV_LOSS_HPP_

#include <cstddef>
#include <span>

#include "sladv/tensor.hpp"

namespace sladv::nn {

struct LossResult {
  double loss = 0.0;
  Tensor grad;  // d loss / d logits, same shape as the logits
};

// Mean over the batch of -log softmax(logits)[label], with max-subtraction.
// logits: [B, C]; labels.size() == B. Throws InputError on a bad label.
LossResult softmax_cross_entropy(const Tensor& logits, std::span<const std::size_t> labels);

// Single-sample form; logits of shape [C].
LossResult softmax_cross_entropy(const Tensor& logits, std::size_t label);

std::size_t argmax(std::span<const double> values);

}  // namespace sladv::nn

#endif  // SLADV_LOSS_HPP_
