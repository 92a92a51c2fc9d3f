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

#ifndef SLADV_ATTACK_HPP_
#define SLADV_ATTACK_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "sladv/data.hpp"
#include "sladv/network.hpp"

namespace sladv::attack {

// How the descent direction is turned into an update of delta.
enum class StepRule {
  gradient,  // delta -= beta * g
  sign,      // delta -= beta * sign(g)
};

// Which derivative of the cosine objective drives the step.
enum class CosineGradient {
  // True derivative of cos(o_2, o_2'). It vanishes at delta = 0, where the
  // cosine is maximal.
  exact,
  // ||o_2'|| held constant for the step, i.e. the derivative of
  // o_2 . o_2' / (||o_2|| ||o_2'||) under the unit-norm constraint. Nonzero
  // at delta = 0, pointing along -J^T o_2.
  fixed_norm,
};

std::string_view step_rule_name(StepRule r);
StepRule step_rule_from_name(std::string_view name);
std::string_view cosine_gradient_name(CosineGradient g);
CosineGradient cosine_gradient_from_name(std::string_view name);

struct AttackConfig {
  double epsilon = 0.3;  // infinity-norm budget
  double beta = 0.3;     // step size
  std::size_t iterations = 1;
  double lo = 0.0;  // valid input range
  double hi = 1.0;
  StepRule step = StepRule::sign;
  CosineGradient gradient = CosineGradient::fixed_norm;

  // Throws ConfigError with an attack.* field path.
  void validate() const;
};

// Denominator floor of the cosine.
inline constexpr double kCosineFloor = 1e-12;

struct AttackLoss {
  double loss = 0.0;  // cosine similarity, in [-1, 1]
  nn::Tensor grad;    // d loss / d o_2' (o_2 constant), shape [n]
};

// Cosine between the clean and perturbed intermediate outputs of one sample.
// Throws DegenerateInputError when o_2 is all zeros.
AttackLoss attack_loss(std::span<const double> o2, std::span<const double> o2p,
                       CosineGradient mode = CosineGradient::exact);

// Clamps delta into [-eps, eps] and then x + delta into [lo, hi].
nn::Tensor clip_to_budget(const nn::Tensor& delta, const nn::Tensor& x, const AttackConfig& config);

struct AdversarialBatch {
  nn::Tensor clean;
  nn::Tensor delta;
  nn::Tensor adversarial;          // clamp(clean + delta, lo, hi)
  std::vector<char> skipped;       // per sample: clean activation was zero
  std::vector<double> cosine;      // per sample cos(o_2, o_2') on the proxy
  std::size_t skipped_count() const;
};

// Gradient of sum_i cos(o_2[i], o_2'[i]) with respect to the pipeline input,
// evaluated at x + delta, with o_2 = proxy(x) given. Samples with zero o_2 get
// a zero gradient and are flagged in `degenerate`.
nn::Tensor cosine_input_gradient(const nn::Pipeline& proxy, const nn::Tensor& x_plus_delta, const nn::Tensor& clean_o2,
                                 CosineGradient mode, std::vector<char>* degenerate = nullptr);

// K steps of delta <- Clip{delta - beta * step(dL_attack/d delta)} from
// delta = 0.
AdversarialBatch craft(const nn::Pipeline& proxy, const nn::Tensor& x, const AttackConfig& config);

// Equal-budget baselines: uniform noise in [-eps, eps], and +-eps with random
// signs. Both are clipped like crafted perturbations.
nn::Tensor random_noise(const nn::Tensor& x, const AttackConfig& config, Rng& rng);
nn::Tensor random_sign_noise(const nn::Tensor& x, const AttackConfig& config, Rng& rng);

struct AttackReport {
  std::size_t samples = 0;
  std::size_t skipped = 0;
  double clean_accuracy = 0.0;  // fractions in [0, 1]
  double adversarial_accuracy = 0.0;
  double random_noise_accuracy = 0.0;
  double random_sign_accuracy = 0.0;
  double accuracy_drop = 0.0;  // percentage points
  double random_noise_drop = 0.0;
  double random_sign_drop = 0.0;
  double mean_proxy_cosine = 0.0;
};

double accuracy_drop_points(double clean, double adversarial);

// Accuracy of `target` on clean, SLADV-perturbed and both equal-budget noise
// inputs. `adversarial_out`, when given, receives every crafted batch.
AttackReport evaluate_attack(const nn::Pipeline& target, const data::Dataset& test, const nn::Pipeline& proxy,
                             const AttackConfig& config, std::uint64_t noise_seed, std::size_t batch_size = 250,
                             std::vector<AdversarialBatch>* adversarial_out = nullptr);

std::vector<std::size_t> predict(const nn::Pipeline& model, const nn::Tensor& x);

}  // namespace sladv::attack

#endif  // SLADV_ATTACK_HPP_
