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

#ifndef SLADV_PROBES_HPP_
#define SLADV_PROBES_HPP_

#include <cstddef>

#include "sladv/attack.hpp"
#include "sladv/data.hpp"
#include "sladv/network.hpp"

namespace sladv::probes {

struct ProbeReport {
  double d_hat = 0.0;          // max_x ||F_1(x) - F_1'(x)|| over the probe set
  double alignment_cos = 0.0;  // mean cos(shadow-crafted delta, true-crafted delta)
  double sign_fraction = 0.0;  // fraction with dL/do_2 . o_2 < 0
  double transfer_cos = 0.0;   // mean cos(o_2(x), o_2(x_adv)) on the true layers
};

// Largest per-sample L2 distance between the two stacks' outputs.
double probe_output_distance(const nn::Network& theta1, const nn::Network& theta1p, const nn::Tensor& probe_set);

// Mean per-sample cosine between the one-step attack directions computed
// through theta1' + theta2 and through theta1 + theta2, both at delta = 0.
double probe_alignment(const nn::Network& theta1, const nn::Network& theta1p, const nn::Network& theta2,
                       const nn::Tensor& samples,
                       attack::CosineGradient mode = attack::CosineGradient::fixed_norm);

// Per-sample delta = -eps * g / ||g||_2 with g = d/dx [o_2 . F_2(F_1'(x))],
// o_2 held at its clean value. Throws DegenerateInputError when some g is 0.
nn::Tensor closed_form_delta(const nn::Network& theta1p, const nn::Network& theta2, const nn::Tensor& x,
                             double epsilon);

// Fraction of samples whose task-loss gradient at o_2 points against o_2.
double probe_loss_sign(const nn::Network& theta1, const nn::Network& theta2, const nn::Network& theta3,
                       const data::Dataset& samples);

// Mean cos(o_2(x), o_2(x_adv)) through theta1 + theta2.
double transfer_cos(const nn::Network& theta1, const nn::Network& theta2, const nn::Tensor& clean,
                    const nn::Tensor& adversarial);

}  // namespace sladv::probes

#endif  // SLADV_PROBES_HPP_
