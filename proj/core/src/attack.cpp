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

#include "sladv/attack.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sladv/errors.hpp"
#include "sladv/loss.hpp"

namespace sladv::attack {

std::string_view step_rule_name(StepRule r) { return r == StepRule::sign ? "sign" : "gradient"; }

StepRule step_rule_from_name(std::string_view name) {
  if (name == "sign") return StepRule::sign;
  if (name == "gradient") return StepRule::gradient;
  throw ConfigError("unknown step rule '" + std::string(name) + "'", "attack.step");
}

std::string_view cosine_gradient_name(CosineGradient g) {
  return g == CosineGradient::exact ? "exact" : "fixed-norm";
}

CosineGradient cosine_gradient_from_name(std::string_view name) {
  if (name == "exact") return CosineGradient::exact;
  if (name == "fixed-norm") return CosineGradient::fixed_norm;
  throw ConfigError("unknown cosine gradient '" + std::string(name) + "'", "attack.gradient");
}

void AttackConfig::validate() const {
  if (!(hi > lo)) throw ConfigError("input range must satisfy lo < hi", "attack.input_range");
  if (!(epsilon >= 0.0)) throw ConfigError("epsilon must be non-negative", "attack.epsilon");
  if (epsilon > hi - lo) throw ConfigError("epsilon exceeds the width of the input range", "attack.epsilon");
  if (!(beta > 0.0)) throw ConfigError("beta must be positive", "attack.beta");
  if (iterations == 0) throw ConfigError("at least one iteration is required", "attack.iterations");
}

AttackLoss attack_loss(std::span<const double> o2, std::span<const double> o2p, CosineGradient mode) {
  if (o2.size() != o2p.size()) throw ConfigError("attack loss operands differ in length");
  const double n2 = nn::l2_norm(o2);
  if (n2 == 0.0) throw DegenerateInputError("clean intermediate output is all zeros");
  const double n2p = nn::l2_norm(o2p);
  const double d = nn::dot(o2, o2p);
  const double denom = std::max(n2 * n2p, kCosineFloor);
  AttackLoss out{std::clamp(d / denom, -1.0, 1.0), nn::Tensor({o2.size()})};
  const bool floored = n2 * n2p < kCosineFloor;
  for (std::size_t i = 0; i < o2.size(); ++i) {
    double g = o2[i] / denom;
    if (mode == CosineGradient::exact && !floored) g -= d * o2p[i] / (denom * n2p * n2p);
    out.grad[i] = g;
  }
  return out;
}

nn::Tensor clip_to_budget(const nn::Tensor& delta, const nn::Tensor& x, const AttackConfig& config) {
  if (delta.shape() != x.shape()) throw ConfigError("delta and x differ in shape");
  nn::Tensor out(delta.shape());
  const double eps = config.epsilon;
  for (std::size_t i = 0; i < delta.size(); ++i) {
    const double d = std::clamp(delta[i], -eps, eps);
    const double moved = x[i] + d;
    // Only touch d when the range binds, so in-range deltas come back exact.
    if (moved > config.hi) {
      out[i] = std::clamp(config.hi - x[i], -eps, eps);
    } else if (moved < config.lo) {
      out[i] = std::clamp(config.lo - x[i], -eps, eps);
    } else {
      out[i] = d;
    }
  }
  return out;
}

std::size_t AdversarialBatch::skipped_count() const {
  return static_cast<std::size_t>(std::count(skipped.begin(), skipped.end(), 1));
}

nn::Tensor cosine_input_gradient(const nn::Pipeline& proxy, const nn::Tensor& x_plus_delta, const nn::Tensor& clean_o2,
                                 CosineGradient mode, std::vector<char>* degenerate) {
  const auto trace = proxy.forward(x_plus_delta);
  const nn::Tensor& o2p = trace.output();
  if (o2p.shape() != clean_o2.shape()) throw ConfigError("clean and perturbed outputs differ in shape");
  nn::Tensor upstream(o2p.shape());
  if (degenerate) degenerate->assign(o2p.batch(), 0);
  for (std::size_t n = 0; n < o2p.batch(); ++n) {
    if (nn::l2_norm(clean_o2.sample(n)) == 0.0) {
      if (degenerate) (*degenerate)[n] = 1;
      continue;
    }
    const AttackLoss l = attack_loss(clean_o2.sample(n), o2p.sample(n), mode);
    std::copy(l.grad.data().begin(), l.grad.data().end(), upstream.sample(n).begin());
  }
  return proxy.input_gradient(trace, upstream);
}

namespace {

nn::Tensor adversarial_from(const nn::Tensor& x, const nn::Tensor& delta, const AttackConfig& config) {
  nn::Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::clamp(x[i] + delta[i], config.lo, config.hi);
  return out;
}

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace

AdversarialBatch craft(const nn::Pipeline& proxy, const nn::Tensor& x, const AttackConfig& config) {
  config.validate();
  const nn::Tensor clean_o2 = proxy.infer(x);
  AdversarialBatch out;
  out.clean = x;
  out.delta = nn::Tensor(x.shape());
  for (std::size_t n = 0; n < x.batch(); ++n) out.skipped.push_back(nn::l2_norm(clean_o2.sample(n)) == 0.0 ? 1 : 0);

  if (config.epsilon > 0.0) {
    for (std::size_t k = 0; k < config.iterations; ++k) {
      const nn::Tensor probe = adversarial_from(x, out.delta, config);
      const nn::Tensor g = cosine_input_gradient(proxy, probe, clean_o2, config.gradient);
      nn::Tensor next = out.delta;
      for (std::size_t i = 0; i < next.size(); ++i) {
        next[i] -= config.beta * (config.step == StepRule::sign ? sign(g[i]) : g[i]);
      }
      out.delta = clip_to_budget(next, x, config);
      for (std::size_t n = 0; n < x.batch(); ++n) {
        if (out.skipped[n]) std::fill(out.delta.sample(n).begin(), out.delta.sample(n).end(), 0.0);
      }
    }
  }
  out.adversarial = adversarial_from(x, out.delta, config);
  const nn::Tensor adv_o2 = proxy.infer(out.adversarial);
  for (std::size_t n = 0; n < x.batch(); ++n) {
    out.cosine.push_back(out.skipped[n] ? 1.0 : attack_loss(clean_o2.sample(n), adv_o2.sample(n)).loss);
  }
  return out;
}

nn::Tensor random_noise(const nn::Tensor& x, const AttackConfig& config, Rng& rng) {
  nn::Tensor delta(x.shape());
  for (double& d : delta.data()) d = rng.uniform(-config.epsilon, config.epsilon);
  return adversarial_from(x, clip_to_budget(delta, x, config), config);
}

nn::Tensor random_sign_noise(const nn::Tensor& x, const AttackConfig& config, Rng& rng) {
  nn::Tensor delta(x.shape());
  for (double& d : delta.data()) d = rng.uniform() < 0.5 ? -config.epsilon : config.epsilon;
  return adversarial_from(x, clip_to_budget(delta, x, config), config);
}

double accuracy_drop_points(double clean, double adversarial) { return 100.0 * (clean - adversarial); }

std::vector<std::size_t> predict(const nn::Pipeline& model, const nn::Tensor& x) {
  const nn::Tensor logits = model.infer(x);
  std::vector<std::size_t> out;
  out.reserve(logits.batch());
  for (std::size_t n = 0; n < logits.batch(); ++n) out.push_back(nn::argmax(logits.sample(n)));
  return out;
}

AttackReport evaluate_attack(const nn::Pipeline& target, const data::Dataset& test, const nn::Pipeline& proxy,
                             const AttackConfig& config, std::uint64_t noise_seed, std::size_t batch_size,
                             std::vector<AdversarialBatch>* adversarial_out) {
  config.validate();
  if (test.size() == 0) throw InputError("the test set is empty");
  if (batch_size == 0) throw ConfigError("evaluation batch size must be positive");
  Rng rng(noise_seed);
  Rng sign_rng(Rng::derive(noise_seed, 1));
  std::size_t clean_hits = 0, adv_hits = 0, noise_hits = 0, sign_hits = 0;
  double cosine_sum = 0.0;
  AttackReport report;
  for (std::size_t start = 0; start < test.size(); start += batch_size) {
    std::vector<std::size_t> idx;
    for (std::size_t i = start; i < std::min(test.size(), start + batch_size); ++i) idx.push_back(i);
    const nn::Tensor x = test.batch_images(idx);
    const auto y = test.batch_labels(idx);
    AdversarialBatch adv = craft(proxy, x, config);
    const auto clean_pred = predict(target, x);
    const auto adv_pred = predict(target, adv.adversarial);
    const auto noise_pred = predict(target, random_noise(x, config, rng));
    const auto sign_pred = predict(target, random_sign_noise(x, config, sign_rng));
    for (std::size_t n = 0; n < y.size(); ++n) {
      clean_hits += clean_pred[n] == y[n];
      adv_hits += adv_pred[n] == y[n];
      noise_hits += noise_pred[n] == y[n];
      sign_hits += sign_pred[n] == y[n];
      cosine_sum += adv.cosine[n];
    }
    report.skipped += adv.skipped_count();
    if (adversarial_out) adversarial_out->push_back(std::move(adv));
  }
  const double n = static_cast<double>(test.size());
  report.samples = test.size();
  report.clean_accuracy = static_cast<double>(clean_hits) / n;
  report.adversarial_accuracy = static_cast<double>(adv_hits) / n;
  report.random_noise_accuracy = static_cast<double>(noise_hits) / n;
  report.random_sign_accuracy = static_cast<double>(sign_hits) / n;
  report.accuracy_drop = accuracy_drop_points(report.clean_accuracy, report.adversarial_accuracy);
  report.random_noise_drop = accuracy_drop_points(report.clean_accuracy, report.random_noise_accuracy);
  report.random_sign_drop = accuracy_drop_points(report.clean_accuracy, report.random_sign_accuracy);
  report.mean_proxy_cosine = cosine_sum / n;
  return report;
}

}  // namespace sladv::attack
