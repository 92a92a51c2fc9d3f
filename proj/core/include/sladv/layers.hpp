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

#ifndef SLADV_LAYERS_HPP_
#define SLADV_LAYERS_HPP_

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "sladv/tensor.hpp"

namespace sladv::nn {

// Codes are part of the checkpoint format; do not renumber.
enum class LayerKind : std::uint8_t {
  dense = 1,
  conv2d = 2,
  relu = 3,
  avgpool2d = 4,
  flatten = 5,
  residual_block = 6,
};

std::string_view kind_name(LayerKind kind);
LayerKind kind_from_name(std::string_view name);  // throws ConfigError
bool is_valid_kind_code(std::uint8_t code);

// One layer: kind, hyperparameters and owned parameter tensors.
//
//   dense           in -> out features; params {W[out,in], b[out]}
//   conv2d          in -> out channels, square kernel, stride, zero padding;
//                   params {W[out,in,k,k], b[out]}
//   relu, flatten   no hyperparameters
//   avgpool2d       kernel = window, stride; no padding
//   residual_block  in = channels, odd kernel, "same" padding;
//                   y = x + conv_b(relu(conv_a(x)));
//                   params {Wa, ba, Wb, bb}
struct LayerSpec {
  LayerKind kind = LayerKind::relu;
  std::size_t in = 0;
  std::size_t out = 0;
  std::size_t kernel = 0;
  std::size_t stride = 1;
  std::size_t padding = 0;
  std::vector<Tensor> params;

  static LayerSpec dense(std::size_t in_features, std::size_t out_features);
  static LayerSpec conv2d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel,
                          std::size_t stride = 1, std::size_t padding = 0);
  static LayerSpec relu();
  static LayerSpec avgpool2d(std::size_t window, std::size_t stride = 0);
  static LayerSpec flatten();
  static LayerSpec residual_block(std::size_t channels, std::size_t kernel = 3);

  // Per-sample shapes (no batch axis). Throws ConfigError when the input
  // shape does not fit the hyperparameters.
  Shape output_shape(const Shape& input) const;
  std::vector<Shape> param_shapes() const;
  std::size_t parameter_count() const;
  // Fan-in of each parameter tensor, used for He initialisation.
  std::vector<std::size_t> param_fan_in() const;
};

// Batched evaluation of a single layer. `aux` receives the intermediate
// activations backward needs (only residual blocks use it).
Tensor layer_forward(const LayerSpec& layer, const Tensor& x, std::vector<Tensor>* aux);

// Accumulates parameter gradients into `param_grads` (pre-sized, may be
// null) and returns the input gradient when `want_input` is set.
Tensor layer_backward(const LayerSpec& layer, const Tensor& x, const std::vector<Tensor>& aux,
                      const Tensor& grad_out, std::vector<Tensor>* param_grads, bool want_input);

}  // namespace sladv::nn

#endif  // SLADV_LAYERS_HPP_
