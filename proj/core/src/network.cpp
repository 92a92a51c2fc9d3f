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

#include "sladv/network.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "sladv/errors.hpp"

namespace sladv::nn {

Network::Network(Shape input_shape, std::vector<LayerSpec> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw ConfigError("a network needs at least one layer");
  if (input_shape.empty()) throw ConfigError("network input shape is empty");
  shapes_.reserve(layers_.size() + 1);
  shapes_.push_back(std::move(input_shape));
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    LayerSpec& layer = layers_[i];
    try {
      shapes_.push_back(layer.output_shape(shapes_.back()));
    } catch (const ConfigError& e) {
      throw ConfigError("layer " + std::to_string(i) + ": " + e.what());
    }
    const auto expected = layer.param_shapes();
    if (layer.params.empty()) {
      for (const auto& s : expected) layer.params.emplace_back(s);
    } else {
      if (layer.params.size() != expected.size()) {
        throw ConfigError("layer " + std::to_string(i) + ": expected " + std::to_string(expected.size()) +
                          " parameter tensors, got " + std::to_string(layer.params.size()));
      }
      for (std::size_t p = 0; p < expected.size(); ++p) {
        if (layer.params[p].shape() != expected[p]) {
          throw ConfigError("layer " + std::to_string(i) + ": parameter " + std::to_string(p) + " has shape " +
                            shape_string(layer.params[p].shape()) + ", expected " + shape_string(expected[p]));
        }
      }
    }
  }
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.parameter_count();
  return n;
}

ParamGrads Network::zero_grads() const {
  ParamGrads g(layers_.size());
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    for (const auto& p : layers_[i].params) g[i].emplace_back(p.shape());
  }
  return g;
}

std::vector<Network> Network::split(Network&& whole, const std::vector<std::size_t>& counts) {
  std::size_t total = 0;
  for (std::size_t c : counts) {
    if (c == 0) throw ConfigError("every segment needs at least one layer");
    total += c;
  }
  if (total != whole.layer_count()) {
    throw ConfigError("segment sizes sum to " + std::to_string(total) + " but the network has " +
                      std::to_string(whole.layer_count()) + " layers");
  }
  std::vector<Network> parts;
  std::size_t first = 0;
  for (std::size_t c : counts) {
    std::vector<LayerSpec> slice;
    slice.reserve(c);
    for (std::size_t i = first; i < first + c; ++i) slice.push_back(std::move(whole.layers_[i]));
    parts.emplace_back(whole.shapes_[first], std::move(slice));
    first += c;
  }
  whole.layers_.clear();
  whole.shapes_.clear();
  return parts;
}

Network Network::concat(const std::vector<const Network*>& parts) {
  if (parts.empty()) throw ConfigError("nothing to concatenate");
  std::vector<LayerSpec> layers;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0 && parts[i - 1]->output_shape() != parts[i]->input_shape()) {
      throw ConfigError("segments do not compose: " + shape_string(parts[i - 1]->output_shape()) + " -> " +
                        shape_string(parts[i]->input_shape()));
    }
    for (const auto& l : parts[i]->layers()) layers.push_back(l);
  }
  return Network(parts.front()->input_shape(), std::move(layers));
}

bool operator==(const Network& a, const Network& b) {
  if (a.shapes_ != b.shapes_ || a.layers_.size() != b.layers_.size()) return false;
  for (std::size_t i = 0; i < a.layers_.size(); ++i) {
    const auto& x = a.layers_[i];
    const auto& y = b.layers_[i];
    if (x.kind != y.kind || x.in != y.in || x.out != y.out || x.kernel != y.kernel || x.stride != y.stride ||
        x.padding != y.padding || x.params != y.params) {
      return false;
    }
  }
  return true;
}

void initialize(Network& net, Rng& rng) {
  for (std::size_t i = 0; i < net.layer_count(); ++i) {
    const auto fan_in = net.layer(i).param_fan_in();
    auto& params = net.params(i);
    for (std::size_t p = 0; p < params.size(); ++p) {
      // Weights and biases alternate; biases are rank 1.
      if (params[p].rank() == 1) {
        params[p].fill(0.0);
        continue;
      }
      const double bound = std::sqrt(6.0 / static_cast<double>(fan_in[p]));
      for (double& v : params[p].data()) v = rng.uniform(-bound, bound);
    }
  }
}

namespace {

void check_input(const Network& net, const Tensor& x) {
  if (x.rank() != net.input_shape().size() + 1 || x.sample_shape() != net.input_shape()) {
    throw ConfigError("network expects batched input of sample shape " + shape_string(net.input_shape()) +
                      ", got " + shape_string(x.shape()));
  }
}

}  // namespace

ActivationTrace forward(const Network& net, const Tensor& x) {
  check_input(net, x);
  ActivationTrace trace;
  trace.inputs.reserve(net.layer_count());
  trace.aux.resize(net.layer_count());
  Tensor current = x;
  for (std::size_t i = 0; i < net.layer_count(); ++i) {
    Tensor next = layer_forward(net.layer(i), current, &trace.aux[i]);
    trace.inputs.push_back(std::move(current));
    current = std::move(next);
  }
  trace.output = std::move(current);
  return trace;
}

Tensor infer(const Network& net, const Tensor& x) {
  check_input(net, x);
  Tensor current = x;
  for (std::size_t i = 0; i < net.layer_count(); ++i) current = layer_forward(net.layer(i), current, nullptr);
  return current;
}

BackwardResult backward(const Network& net, const ActivationTrace& trace, const Tensor& upstream,
                        BackwardOptions options) {
  if (trace.inputs.size() != net.layer_count() || trace.aux.size() != net.layer_count()) {
    throw ConfigError("activation trace does not belong to this network");
  }
  if (upstream.shape() != trace.output.shape()) {
    throw ConfigError("upstream gradient shape " + shape_string(upstream.shape()) + " does not match output " +
                      shape_string(trace.output.shape()));
  }
  BackwardResult result;
  if (options.param_grads) result.param_grads = net.zero_grads();
  Tensor grad = upstream;
  for (std::size_t i = net.layer_count(); i-- > 0;) {
    const bool need_input = i > 0 || options.input_grad;
    if (!options.param_grads && !need_input) break;
    grad = layer_backward(net.layer(i), trace.inputs[i], trace.aux[i], grad,
                          options.param_grads ? &result.param_grads[i] : nullptr, need_input);
  }
  if (options.input_grad) result.input_grad = std::move(grad);
  return result;
}

Pipeline::Pipeline(std::initializer_list<const Network*> stages) : Pipeline(std::vector<const Network*>(stages)) {}

Pipeline::Pipeline(std::vector<const Network*> stages) : stages_(std::move(stages)) {
  if (stages_.empty()) throw ConfigError("a pipeline needs at least one stage");
  for (std::size_t i = 1; i < stages_.size(); ++i) {
    if (stages_[i - 1]->output_shape() != stages_[i]->input_shape()) {
      throw ConfigError("pipeline stages do not compose: " + shape_string(stages_[i - 1]->output_shape()) +
                        " -> " + shape_string(stages_[i]->input_shape()));
    }
  }
}

Tensor Pipeline::infer(const Tensor& x) const {
  Tensor current = x;
  for (const Network* net : stages_) current = nn::infer(*net, current);
  return current;
}

Pipeline::Trace Pipeline::forward(const Tensor& x) const {
  Trace trace;
  trace.stages.reserve(stages_.size());
  const Tensor* current = &x;
  for (const Network* net : stages_) {
    trace.stages.push_back(nn::forward(*net, *current));
    current = &trace.stages.back().output;
  }
  return trace;
}

Tensor Pipeline::input_gradient(const Trace& trace, const Tensor& upstream) const {
  if (trace.stages.size() != stages_.size()) throw ConfigError("pipeline trace does not match pipeline");
  Tensor grad = upstream;
  for (std::size_t i = stages_.size(); i-- > 0;) {
    grad = nn::backward(*stages_[i], trace.stages[i], grad, {.param_grads = false, .input_grad = true}).input_grad;
  }
  return grad;
}

}  // namespace sladv::nn
