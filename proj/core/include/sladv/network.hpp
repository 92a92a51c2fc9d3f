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

#ifndef SLADV_NETWORK_HPP_
#define SLADV_NETWORK_HPP_

#include <cstddef>
#include <initializer_list>
#include <vector>

#include "sladv/layers.hpp"
#include "sladv/rng.hpp"
#include "sladv/tensor.hpp"

namespace sladv::nn {

// Gradient (or velocity) tensors, one vector per layer, mirroring params.
using ParamGrads = std::vector<std::vector<Tensor>>;

// An ordered stack of layers with a fixed per-sample input shape. The
// constructor checks that adjacent layers compose and allocates zeroed
// parameters for layers that arrive without any.
class Network {
 public:
  Network() = default;
  Network(Shape input_shape, std::vector<LayerSpec> layers);

  const Shape& input_shape() const { return shapes_.front(); }
  const Shape& output_shape() const { return shapes_.back(); }
  // Per-sample input shape of layer i; i == layer_count() gives the output.
  const Shape& shape_at(std::size_t i) const { return shapes_.at(i); }

  std::size_t layer_count() const { return layers_.size(); }
  bool empty() const { return layers_.empty(); }
  const LayerSpec& layer(std::size_t i) const { return layers_.at(i); }
  const std::vector<LayerSpec>& layers() const { return layers_; }
  std::vector<Tensor>& params(std::size_t i) { return layers_.at(i).params; }
  const std::vector<Tensor>& params(std::size_t i) const { return layers_.at(i).params; }

  std::size_t parameter_count() const;
  ParamGrads zero_grads() const;

  // Moves layers [first, first + count) out into a new network. The source
  // is left empty; callers slice a network once.
  static std::vector<Network> split(Network&& whole, const std::vector<std::size_t>& counts);
  static Network concat(const std::vector<const Network*>& parts);

  friend bool operator==(const Network& a, const Network& b);

 private:
  std::vector<Shape> shapes_;
  std::vector<LayerSpec> layers_;
};

// He-style scaled uniform weights U(-sqrt(6/fan_in), sqrt(6/fan_in)), zero
// biases.
void initialize(Network& net, Rng& rng);

struct ActivationTrace {
  std::vector<Tensor> inputs;            // input of each layer
  std::vector<std::vector<Tensor>> aux;  // per-layer intermediates
  Tensor output;
};

ActivationTrace forward(const Network& net, const Tensor& x);
Tensor infer(const Network& net, const Tensor& x);

struct BackwardResult {
  ParamGrads param_grads;  // empty when not requested
  Tensor input_grad;       // empty when not requested
};

struct BackwardOptions {
  bool param_grads = true;
  bool input_grad = true;
};

// Vector-Jacobian product of the traced forward pass with `upstream`.
BackwardResult backward(const Network& net, const ActivationTrace& trace, const Tensor& upstream,
                        BackwardOptions options = {});

// Read-only composition of networks, e.g. shadow input layers followed by the
// server layers. The networks must outlive the pipeline.
class Pipeline {
 public:
  Pipeline(std::initializer_list<const Network*> stages);
  explicit Pipeline(std::vector<const Network*> stages);

  const Shape& input_shape() const { return stages_.front()->input_shape(); }
  const Shape& output_shape() const { return stages_.back()->output_shape(); }

  Tensor infer(const Tensor& x) const;

  struct Trace {
    std::vector<ActivationTrace> stages;
    const Tensor& output() const { return stages.back().output; }
  };
  Trace forward(const Tensor& x) const;
  Tensor input_gradient(const Trace& trace, const Tensor& upstream) const;

 private:
  std::vector<const Network*> stages_;
};

}  // namespace sladv::nn

#endif  // SLADV_NETWORK_HPP_
