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

#include "sladv/layers.hpp"

#include <algorithm>
#include <string>

#include "sladv/errors.hpp"

namespace sladv::nn {

std::string_view kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::dense: return "dense";
    case LayerKind::conv2d: return "conv2d";
    case LayerKind::relu: return "relu";
    case LayerKind::avgpool2d: return "avgpool2d";
    case LayerKind::flatten: return "flatten";
    case LayerKind::residual_block: return "residual-block";
  }
  return "unknown";
}

LayerKind kind_from_name(std::string_view name) {
  for (auto kind : {LayerKind::dense, LayerKind::conv2d, LayerKind::relu, LayerKind::avgpool2d,
                    LayerKind::flatten, LayerKind::residual_block}) {
    if (kind_name(kind) == name) return kind;
  }
  throw ConfigError("unknown layer kind '" + std::string(name) + "'");
}

bool is_valid_kind_code(std::uint8_t code) { return code >= 1 && code <= 6; }

LayerSpec LayerSpec::dense(std::size_t in_features, std::size_t out_features) {
  LayerSpec s;
  s.kind = LayerKind::dense;
  s.in = in_features;
  s.out = out_features;
  return s;
}

LayerSpec LayerSpec::conv2d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel,
                            std::size_t stride, std::size_t padding) {
  LayerSpec s;
  s.kind = LayerKind::conv2d;
  s.in = in_channels;
  s.out = out_channels;
  s.kernel = kernel;
  s.stride = stride;
  s.padding = padding;
  return s;
}

LayerSpec LayerSpec::relu() { return LayerSpec{}; }

LayerSpec LayerSpec::avgpool2d(std::size_t window, std::size_t stride) {
  LayerSpec s;
  s.kind = LayerKind::avgpool2d;
  s.kernel = window;
  s.stride = stride == 0 ? window : stride;
  return s;
}

LayerSpec LayerSpec::flatten() {
  LayerSpec s;
  s.kind = LayerKind::flatten;
  return s;
}

LayerSpec LayerSpec::residual_block(std::size_t channels, std::size_t kernel) {
  LayerSpec s;
  s.kind = LayerKind::residual_block;
  s.in = channels;
  s.out = channels;
  s.kernel = kernel;
  s.padding = kernel / 2;
  return s;
}

namespace {

std::string where(const LayerSpec& l) { return std::string(kind_name(l.kind)) + " layer"; }

std::size_t conv_extent(std::size_t size, std::size_t kernel, std::size_t stride, std::size_t pad,
                        const LayerSpec& l) {
  if (size + 2 * pad < kernel) throw ConfigError(where(l) + ": kernel larger than padded input");
  return (size + 2 * pad - kernel) / stride + 1;
}

void require_chw(const LayerSpec& l, const Shape& input) {
  if (input.size() != 3) {
    throw ConfigError(where(l) + " expects a [C,H,W] input, got " + shape_string(input));
  }
}

}  // namespace

Shape LayerSpec::output_shape(const Shape& input) const {
  switch (kind) {
    case LayerKind::dense:
      if (in == 0 || out == 0) throw ConfigError("dense layer needs positive in/out features");
      if (input.size() != 1 || input[0] != in) {
        throw ConfigError("dense layer expects input [" + std::to_string(in) + "], got " +
                          shape_string(input));
      }
      return {out};
    case LayerKind::conv2d: {
      require_chw(*this, input);
      if (in == 0 || out == 0 || kernel == 0 || stride == 0) {
        throw ConfigError("conv2d needs positive channels, kernel and stride");
      }
      if (input[0] != in) {
        throw ConfigError("conv2d expects " + std::to_string(in) + " input channels, got " +
                          shape_string(input));
      }
      return {out, conv_extent(input[1], kernel, stride, padding, *this),
              conv_extent(input[2], kernel, stride, padding, *this)};
    }
    case LayerKind::relu:
      return input;
    case LayerKind::avgpool2d: {
      require_chw(*this, input);
      if (kernel == 0 || stride == 0) throw ConfigError("avgpool2d needs a positive window and stride");
      return {input[0], conv_extent(input[1], kernel, stride, 0, *this),
              conv_extent(input[2], kernel, stride, 0, *this)};
    }
    case LayerKind::flatten:
      return {shape_numel(input)};
    case LayerKind::residual_block:
      require_chw(*this, input);
      if (kernel % 2 == 0 || stride != 1 || padding != kernel / 2 || in != out) {
        throw ConfigError("residual-block needs an odd kernel, unit stride and equal channels");
      }
      if (input[0] != in) {
        throw ConfigError("residual-block expects " + std::to_string(in) + " channels, got " +
                          shape_string(input));
      }
      return input;
  }
  throw ConfigError("invalid layer kind");
}

std::vector<Shape> LayerSpec::param_shapes() const {
  switch (kind) {
    case LayerKind::dense:
      return {{out, in}, {out}};
    case LayerKind::conv2d:
      return {{out, in, kernel, kernel}, {out}};
    case LayerKind::residual_block:
      return {{in, in, kernel, kernel}, {in}, {in, in, kernel, kernel}, {in}};
    default:
      return {};
  }
}

std::vector<std::size_t> LayerSpec::param_fan_in() const {
  switch (kind) {
    case LayerKind::dense:
      return {in, in};
    case LayerKind::conv2d:
      return {in * kernel * kernel, in * kernel * kernel};
    case LayerKind::residual_block: {
      const std::size_t f = in * kernel * kernel;
      return {f, f, f, f};
    }
    default:
      return {};
  }
}

std::size_t LayerSpec::parameter_count() const {
  std::size_t n = 0;
  for (const auto& s : param_shapes()) n += shape_numel(s);
  return n;
}

namespace {

struct ConvGeometry {
  std::size_t batch, in_c, h, w, out_c, k, stride, pad, oh, ow;
};

ConvGeometry conv_geometry(const Tensor& x, std::size_t out_c, std::size_t k, std::size_t stride,
                           std::size_t pad) {
  ConvGeometry g{};
  g.batch = x.dim(0);
  g.in_c = x.dim(1);
  g.h = x.dim(2);
  g.w = x.dim(3);
  g.out_c = out_c;
  g.k = k;
  g.stride = stride;
  g.pad = pad;
  g.oh = (g.h + 2 * pad - k) / stride + 1;
  g.ow = (g.w + 2 * pad - k) / stride + 1;
  return g;
}

// Output columns [lo, hi) whose input column ox*stride + offset - pad lies
// inside [0, w).
void valid_range(std::size_t offset, std::size_t pad, std::size_t stride, std::size_t extent,
                 std::size_t out_extent, std::size_t& lo, std::size_t& hi) {
  lo = offset >= pad ? 0 : (pad - offset + stride - 1) / stride;
  if (extent + pad <= offset) {
    hi = 0;
  } else {
    hi = std::min(out_extent, (extent + pad - offset - 1) / stride + 1);
  }
  if (hi < lo) hi = lo;
}

Tensor conv_forward(const Tensor& x, const Tensor& weight, const Tensor& bias, std::size_t stride,
                    std::size_t pad) {
  const ConvGeometry g = conv_geometry(x, weight.dim(0), weight.dim(2), stride, pad);
  Tensor y({g.batch, g.out_c, g.oh, g.ow});
  const double* xd = x.data().data();
  const double* wd = weight.data().data();
  double* yd = y.data().data();
  for (std::size_t n = 0; n < g.batch; ++n) {
    for (std::size_t o = 0; o < g.out_c; ++o) {
      double* yp = yd + (n * g.out_c + o) * g.oh * g.ow;
      std::fill(yp, yp + g.oh * g.ow, bias[o]);
      for (std::size_t c = 0; c < g.in_c; ++c) {
        const double* xp = xd + (n * g.in_c + c) * g.h * g.w;
        const double* wp = wd + (o * g.in_c + c) * g.k * g.k;
        for (std::size_t ky = 0; ky < g.k; ++ky) {
          std::size_t oy_lo = 0, oy_hi = 0;
          valid_range(ky, pad, stride, g.h, g.oh, oy_lo, oy_hi);
          for (std::size_t kx = 0; kx < g.k; ++kx) {
            const double wv = wp[ky * g.k + kx];
            std::size_t ox_lo = 0, ox_hi = 0;
            valid_range(kx, pad, stride, g.w, g.ow, ox_lo, ox_hi);
            for (std::size_t oy = oy_lo; oy < oy_hi; ++oy) {
              const double* xr = xp + (oy * stride + ky - pad) * g.w;
              double* yr = yp + oy * g.ow;
              if (stride == 1) {
                for (std::size_t ox = ox_lo; ox < ox_hi; ++ox) yr[ox] += wv * xr[ox + kx - pad];
              } else {
                for (std::size_t ox = ox_lo; ox < ox_hi; ++ox) yr[ox] += wv * xr[ox * stride + kx - pad];
              }
            }
          }
        }
      }
    }
  }
  return y;
}

// grad_w / grad_b accumulate; grad_x (if non-null) must be zeroed by caller.
void conv_backward(const Tensor& x, const Tensor& weight, const Tensor& gy, std::size_t stride,
                   std::size_t pad, Tensor* grad_w, Tensor* grad_b, Tensor* grad_x) {
  const ConvGeometry g = conv_geometry(x, weight.dim(0), weight.dim(2), stride, pad);
  const double* xd = x.data().data();
  const double* wd = weight.data().data();
  const double* gd = gy.data().data();
  double* gwd = grad_w ? grad_w->data().data() : nullptr;
  double* gxd = grad_x ? grad_x->data().data() : nullptr;
  for (std::size_t n = 0; n < g.batch; ++n) {
    for (std::size_t o = 0; o < g.out_c; ++o) {
      const double* gp = gd + (n * g.out_c + o) * g.oh * g.ow;
      if (grad_b) {
        double acc = 0.0;
        for (std::size_t i = 0; i < g.oh * g.ow; ++i) acc += gp[i];
        (*grad_b)[o] += acc;
      }
      for (std::size_t c = 0; c < g.in_c; ++c) {
        const std::size_t plane = (n * g.in_c + c) * g.h * g.w;
        const double* xp = xd + plane;
        double* gxp = gxd ? gxd + plane : nullptr;
        const std::size_t wbase = (o * g.in_c + c) * g.k * g.k;
        for (std::size_t ky = 0; ky < g.k; ++ky) {
          std::size_t oy_lo = 0, oy_hi = 0;
          valid_range(ky, pad, stride, g.h, g.oh, oy_lo, oy_hi);
          for (std::size_t kx = 0; kx < g.k; ++kx) {
            const double wv = wd[wbase + ky * g.k + kx];
            std::size_t ox_lo = 0, ox_hi = 0;
            valid_range(kx, pad, stride, g.w, g.ow, ox_lo, ox_hi);
            double acc = 0.0;
            for (std::size_t oy = oy_lo; oy < oy_hi; ++oy) {
              const std::size_t row = (oy * stride + ky - pad) * g.w;
              const double* gr = gp + oy * g.ow;
              const double* xr = xp + row;
              if (stride == 1) {
                for (std::size_t ox = ox_lo; ox < ox_hi; ++ox) acc += gr[ox] * xr[ox + kx - pad];
                if (gxp) {
                  double* gxr = gxp + row;
                  for (std::size_t ox = ox_lo; ox < ox_hi; ++ox) gxr[ox + kx - pad] += wv * gr[ox];
                }
              } else {
                for (std::size_t ox = ox_lo; ox < ox_hi; ++ox) acc += gr[ox] * xr[ox * stride + kx - pad];
                if (gxp) {
                  double* gxr = gxp + row;
                  for (std::size_t ox = ox_lo; ox < ox_hi; ++ox) gxr[ox * stride + kx - pad] += wv * gr[ox];
                }
              }
            }
            if (gwd) gwd[wbase + ky * g.k + kx] += acc;
          }
        }
      }
    }
  }
}

Tensor dense_forward(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  const std::size_t batch = x.dim(0), in = weight.dim(1), out = weight.dim(0);
  Tensor y({batch, out});
  for (std::size_t n = 0; n < batch; ++n) {
    const double* xr = x.data().data() + n * in;
    for (std::size_t o = 0; o < out; ++o) {
      const double* wr = weight.data().data() + o * in;
      double acc = 0.0;
      for (std::size_t i = 0; i < in; ++i) acc += wr[i] * xr[i];
      y[n * out + o] = acc + bias[o];
    }
  }
  return y;
}

Tensor relu_forward(const Tensor& x) {
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
  return y;
}

// Gradient mask uses the pre-activation: zero where x <= 0.
Tensor relu_backward(const Tensor& x, const Tensor& gy) {
  Tensor gx(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) gx[i] = x[i] > 0.0 ? gy[i] : 0.0;
  return gx;
}

Tensor pool_forward(const Tensor& x, std::size_t window, std::size_t stride) {
  const std::size_t batch = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::size_t oh = (h - window) / stride + 1, ow = (w - window) / stride + 1;
  const double scale = 1.0 / static_cast<double>(window * window);
  Tensor y({batch, c, oh, ow});
  for (std::size_t p = 0; p < batch * c; ++p) {
    const double* xp = x.data().data() + p * h * w;
    double* yp = y.data().data() + p * oh * ow;
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        double acc = 0.0;
        for (std::size_t dy = 0; dy < window; ++dy) {
          for (std::size_t dx = 0; dx < window; ++dx) acc += xp[(oy * stride + dy) * w + ox * stride + dx];
        }
        yp[oy * ow + ox] = acc * scale;
      }
    }
  }
  return y;
}

Tensor pool_backward(const Tensor& x, const Tensor& gy, std::size_t window, std::size_t stride) {
  const std::size_t batch = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::size_t oh = gy.dim(2), ow = gy.dim(3);
  const double scale = 1.0 / static_cast<double>(window * window);
  Tensor gx(x.shape());
  for (std::size_t p = 0; p < batch * c; ++p) {
    double* gxp = gx.data().data() + p * h * w;
    const double* gp = gy.data().data() + p * oh * ow;
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        const double v = gp[oy * ow + ox] * scale;
        for (std::size_t dy = 0; dy < window; ++dy) {
          for (std::size_t dx = 0; dx < window; ++dx) gxp[(oy * stride + dy) * w + ox * stride + dx] += v;
        }
      }
    }
  }
  return gx;
}

Shape batched(std::size_t batch, Shape sample) {
  sample.insert(sample.begin(), batch);
  return sample;
}

}  // namespace

Tensor layer_forward(const LayerSpec& layer, const Tensor& x, std::vector<Tensor>* aux) {
  switch (layer.kind) {
    case LayerKind::dense:
      return dense_forward(x, layer.params[0], layer.params[1]);
    case LayerKind::conv2d:
      return conv_forward(x, layer.params[0], layer.params[1], layer.stride, layer.padding);
    case LayerKind::relu:
      return relu_forward(x);
    case LayerKind::avgpool2d:
      return pool_forward(x, layer.kernel, layer.stride);
    case LayerKind::flatten:
      return x.reshaped(batched(x.batch(), {x.sample_size()}));
    case LayerKind::residual_block: {
      Tensor a = conv_forward(x, layer.params[0], layer.params[1], 1, layer.padding);
      Tensor r = relu_forward(a);
      Tensor y = conv_forward(r, layer.params[2], layer.params[3], 1, layer.padding);
      for (std::size_t i = 0; i < y.size(); ++i) y[i] += x[i];
      if (aux) {
        aux->clear();
        aux->push_back(std::move(a));
        aux->push_back(std::move(r));
      }
      return y;
    }
  }
  throw InternalError("invalid layer kind");
}

Tensor layer_backward(const LayerSpec& layer, const Tensor& x, const std::vector<Tensor>& aux,
                      const Tensor& grad_out, std::vector<Tensor>* param_grads, bool want_input) {
  switch (layer.kind) {
    case LayerKind::dense: {
      const Tensor& w = layer.params[0];
      const std::size_t batch = x.dim(0), in = w.dim(1), out = w.dim(0);
      if (param_grads) {
        Tensor& gw = (*param_grads)[0];
        Tensor& gb = (*param_grads)[1];
        for (std::size_t n = 0; n < batch; ++n) {
          const double* xr = x.data().data() + n * in;
          for (std::size_t o = 0; o < out; ++o) {
            const double g = grad_out[n * out + o];
            double* gwr = gw.data().data() + o * in;
            for (std::size_t i = 0; i < in; ++i) gwr[i] += g * xr[i];
            gb[o] += g;
          }
        }
      }
      if (!want_input) return {};
      Tensor gx(x.shape());
      for (std::size_t n = 0; n < batch; ++n) {
        double* gxr = gx.data().data() + n * in;
        for (std::size_t o = 0; o < out; ++o) {
          const double g = grad_out[n * out + o];
          const double* wr = w.data().data() + o * in;
          for (std::size_t i = 0; i < in; ++i) gxr[i] += g * wr[i];
        }
      }
      return gx;
    }
    case LayerKind::conv2d: {
      Tensor gx;
      if (want_input) gx = Tensor(x.shape());
      conv_backward(x, layer.params[0], grad_out, layer.stride, layer.padding,
                    param_grads ? &(*param_grads)[0] : nullptr,
                    param_grads ? &(*param_grads)[1] : nullptr, want_input ? &gx : nullptr);
      return gx;
    }
    case LayerKind::relu:
      return want_input ? relu_backward(x, grad_out) : Tensor{};
    case LayerKind::avgpool2d:
      return want_input ? pool_backward(x, grad_out, layer.kernel, layer.stride) : Tensor{};
    case LayerKind::flatten:
      return want_input ? grad_out.reshaped(x.shape()) : Tensor{};
    case LayerKind::residual_block: {
      const Tensor& a = aux.at(0);
      const Tensor& r = aux.at(1);
      Tensor gr(r.shape());
      conv_backward(r, layer.params[2], grad_out, 1, layer.padding,
                    param_grads ? &(*param_grads)[2] : nullptr,
                    param_grads ? &(*param_grads)[3] : nullptr, &gr);
      Tensor ga = relu_backward(a, gr);
      Tensor gx;
      if (want_input) gx = grad_out;
      conv_backward(x, layer.params[0], ga, 1, layer.padding,
                    param_grads ? &(*param_grads)[0] : nullptr,
                    param_grads ? &(*param_grads)[1] : nullptr, want_input ? &gx : nullptr);
      return gx;
    }
  }
  throw InternalError("invalid layer kind");
}

}  // namespace sladv::nn
