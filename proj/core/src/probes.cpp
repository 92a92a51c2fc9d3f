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

#include "sladv/probes.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sladv/errors.hpp"
#include "sladv/loss.hpp"

namespace sladv::probes {

namespace {

void require_samples(const nn::Tensor& x, const char* what) {
  if (x.batch() == 0) throw InputError(std::string(what) + " is empty");
}

}  // namespace

double probe_output_distance(const nn::Network& theta1, const nn::Network& theta1p, const nn::Tensor& probe_set) {
  require_samples(probe_set, "probe set");
  if (theta1.output_shape() != theta1p.output_shape()) {
    throw ConfigError("shadow output shape " + nn::shape_string(theta1p.output_shape()) + " differs from " +
                      nn::shape_string(theta1.output_shape()));
  }
  const nn::Tensor a = nn::infer(theta1, probe_set);
  const nn::Tensor b = nn::infer(theta1p, probe_set);
  double d = 0.0;
  for (std::size_t n = 0; n < a.batch(); ++n) {
    const auto sa = a.sample(n);
    const auto sb = b.sample(n);
    double acc = 0.0;
    for (std::size_t i = 0; i < sa.size(); ++i) acc += (sa[i] - sb[i]) * (sa[i] - sb[i]);
    // A non-finite stack has no meaningful distance; don't let max() drop it.
    if (std::isnan(acc)) return acc;
    d = std::max(d, std::sqrt(acc));
  }
  return d;
}

double probe_alignment(const nn::Network& theta1, const nn::Network& theta1p, const nn::Network& theta2,
                       const nn::Tensor& samples, attack::CosineGradient mode) {
  require_samples(samples, "alignment sample set");
  const nn::Pipeline truth{&theta1, &theta2};
  const nn::Pipeline proxy{&theta1p, &theta2};
  const nn::Tensor g_true = attack::cosine_input_gradient(truth, samples, truth.infer(samples), mode);
  const nn::Tensor g_proxy = attack::cosine_input_gradient(proxy, samples, proxy.infer(samples), mode);
  double sum = 0.0;
  for (std::size_t n = 0; n < samples.batch(); ++n) sum += nn::cosine(g_true.sample(n), g_proxy.sample(n));
  return sum / static_cast<double>(samples.batch());
}

nn::Tensor closed_form_delta(const nn::Network& theta1p, const nn::Network& theta2, const nn::Tensor& x,
                             double epsilon) {
  if (!(epsilon >= 0.0)) throw ConfigError("epsilon must be non-negative", "attack.epsilon");
  nn::Tensor delta(x.shape());
  if (epsilon == 0.0) return delta;
  const nn::Pipeline proxy{&theta1p, &theta2};
  const auto trace = proxy.forward(x);
  // d/do_2' of o_2 . o_2' is o_2 itself.
  const nn::Tensor g = proxy.input_gradient(trace, trace.output());
  for (std::size_t n = 0; n < x.batch(); ++n) {
    const auto gs = g.sample(n);
    const double norm = nn::l2_norm(gs);
    if (norm == 0.0) throw DegenerateInputError("closed-form direction vanishes for sample " + std::to_string(n));
    auto ds = delta.sample(n);
    for (std::size_t i = 0; i < gs.size(); ++i) ds[i] = -epsilon * gs[i] / norm;
  }
  return delta;
}

double probe_loss_sign(const nn::Network& theta1, const nn::Network& theta2, const nn::Network& theta3,
                       const data::Dataset& samples) {
  if (samples.size() == 0) throw InputError("sign probe set is empty");
  const nn::Tensor o2 = nn::infer(theta2, nn::infer(theta1, samples.images));
  const auto trace = nn::forward(theta3, o2);
  const auto loss = nn::softmax_cross_entropy(trace.output, samples.labels);
  const nn::Tensor g = nn::backward(theta3, trace, loss.grad, {.param_grads = false, .input_grad = true}).input_grad;
  std::size_t negative = 0;
  for (std::size_t n = 0; n < o2.batch(); ++n) negative += nn::dot(g.sample(n), o2.sample(n)) < 0.0;
  return static_cast<double>(negative) / static_cast<double>(o2.batch());
}

double transfer_cos(const nn::Network& theta1, const nn::Network& theta2, const nn::Tensor& clean,
                    const nn::Tensor& adversarial) {
  require_samples(clean, "transfer sample set");
  if (clean.shape() != adversarial.shape()) throw ConfigError("clean and adversarial batches differ in shape");
  const nn::Pipeline truth{&theta1, &theta2};
  const nn::Tensor a = truth.infer(clean);
  const nn::Tensor b = truth.infer(adversarial);
  double sum = 0.0;
  for (std::size_t n = 0; n < a.batch(); ++n) sum += nn::cosine(a.sample(n), b.sample(n));
  return sum / static_cast<double>(a.batch());
}

}  // namespace sladv::probes
