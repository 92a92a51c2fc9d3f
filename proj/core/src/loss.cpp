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

#include "sladv/loss.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sladv/errors.hpp"

namespace sladv::nn {

namespace {

// Writes softmax(z) - onehot(label) scaled by `scale` into grad; returns the
// per-sample loss.
double sample_loss(std::span<const double> z, std::size_t label, double scale, std::span<double> grad) {
  if (label >= z.size()) {
    throw InputError("label " + std::to_string(label) + " out of range for " + std::to_string(z.size()) +
                     " classes");
  }
  const double peak = *std::max_element(z.begin(), z.end());
  double total = 0.0;
  for (std::size_t c = 0; c < z.size(); ++c) {
    grad[c] = std::exp(z[c] - peak);
    total += grad[c];
  }
  const double log_total = std::log(total);
  for (std::size_t c = 0; c < z.size(); ++c) {
    grad[c] = scale * (grad[c] / total - (c == label ? 1.0 : 0.0));
  }
  return log_total - (z[label] - peak);
}

}  // namespace

LossResult softmax_cross_entropy(const Tensor& logits, std::span<const std::size_t> labels) {
  if (logits.rank() != 2) throw ConfigError("cross entropy expects [B, C] logits, got " + shape_string(logits.shape()));
  if (labels.size() != logits.dim(0)) throw InputError("label count does not match batch size");
  LossResult result{0.0, Tensor(logits.shape())};
  const double scale = 1.0 / static_cast<double>(labels.size());
  for (std::size_t n = 0; n < labels.size(); ++n) {
    result.loss += sample_loss(logits.sample(n), labels[n], scale, result.grad.sample(n));
  }
  result.loss *= scale;
  return result;
}

LossResult softmax_cross_entropy(const Tensor& logits, std::size_t label) {
  if (logits.rank() != 1) throw ConfigError("expected [C] logits, got " + shape_string(logits.shape()));
  LossResult result{0.0, Tensor(logits.shape())};
  result.loss = sample_loss(logits.data(), label, 1.0, result.grad.data());
  return result;
}

std::size_t argmax(std::span<const double> values) {
  return static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
}

}  // namespace sladv::nn
