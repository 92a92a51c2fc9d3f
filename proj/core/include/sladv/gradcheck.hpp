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

#ifndef SLADV_GRADCHECK_HPP_
#define SLADV_GRADCHECK_HPP_

#include <functional>

#include "sladv/tensor.hpp"

namespace sladv::nn {

// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h per coordinate.
Tensor numeric_gradient(const std::function<double(const Tensor&)>& f, const Tensor& x, double h = 1e-5);

// max_i |a_i - b_i| / max(|a_i| + |b_i|, floor). The floor keeps coordinates
// whose true gradient is zero from dominating.
double relative_error(const Tensor& analytic, const Tensor& numeric, double floor = 1e-7);

}  // namespace sladv::nn

#endif  // SLADV_GRADCHECK_HPP_
