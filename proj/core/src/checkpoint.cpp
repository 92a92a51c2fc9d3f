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

#include "sladv/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <string>

#include "sladv/errors.hpp"

namespace sladv::nn {

namespace {

constexpr std::array<char, 4> kMagic = {'S', 'L', 'N', 'N'};
constexpr std::uint32_t kMaxRank = 8;

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void u8(std::uint8_t v) { out_.put(static_cast<char>(v)); }
  void u32(std::uint64_t v) {
    if (v > std::numeric_limits<std::uint32_t>::max()) throw ConfigError("value does not fit the u32 field");
    for (int i = 0; i < 4; ++i) out_.put(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void f64(double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) out_.put(static_cast<char>((bits >> (8 * i)) & 0xff));
  }
  void tensor(const Tensor& t) {
    u32(t.rank());
    for (std::size_t d : t.shape()) u32(d);
    for (double v : t.data()) f64(v);
  }
  void header(std::uint32_t layers) {
    out_.write(kMagic.data(), kMagic.size());
    u32(kSlnnVersion);
    u32(layers);
  }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::uint64_t offset() const { return offset_; }

  void bytes(char* dst, std::size_t n) {
    in_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) throw FormatError("truncated SLNN stream", offset_ + in_.gcount());
    offset_ += n;
  }
  std::uint8_t u8() {
    char c = 0;
    bytes(&c, 1);
    return static_cast<std::uint8_t>(c);
  }
  std::uint32_t u32() {
    unsigned char b[4];
    bytes(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  }
  double f64() {
    unsigned char b[8];
    bytes(reinterpret_cast<char*>(b), 8);
    std::uint64_t bits = 0;
    for (int i = 7; i >= 0; --i) bits = (bits << 8) | b[i];
    return std::bit_cast<double>(bits);
  }
  Shape shape() {
    const std::uint64_t at = offset_;
    const std::uint32_t rank = u32();
    if (rank > kMaxRank) throw FormatError("tensor rank " + std::to_string(rank) + " is implausible", at);
    Shape s(rank);
    for (auto& d : s) {
      const std::uint64_t dim_at = offset_;
      d = u32();
      if (d == 0) throw FormatError("zero tensor dimension", dim_at);
    }
    return s;
  }
  Tensor tensor() {
    Shape s = shape();
    std::vector<double> data(shape_numel(s));
    for (double& v : data) v = f64();
    return Tensor(std::move(s), std::move(data));
  }
  // Returns the layer count.
  std::uint32_t header() {
    std::array<char, 4> magic{};
    bytes(magic.data(), magic.size());
    if (magic != kMagic) throw FormatError("bad SLNN magic", 0);
    const std::uint64_t at = offset_;
    const std::uint32_t version = u32();
    if (version != kSlnnVersion) throw FormatError("unsupported SLNN version " + std::to_string(version), at);
    return u32();
  }

 private:
  std::istream& in_;
  std::uint64_t offset_ = 0;
};

}  // namespace

void write_network(std::ostream& out, const Network& net) {
  Writer w(out);
  w.header(static_cast<std::uint32_t>(net.layer_count()));
  for (const LayerSpec& l : net.layers()) {
    w.u8(static_cast<std::uint8_t>(l.kind));
    switch (l.kind) {
      case LayerKind::dense:
        w.u32(l.in);
        w.u32(l.out);
        break;
      case LayerKind::conv2d:
        w.u32(l.in);
        w.u32(l.out);
        w.u32(l.kernel);
        w.u32(l.stride);
        w.u32(l.padding);
        break;
      case LayerKind::avgpool2d:
        w.u32(l.kernel);
        w.u32(l.stride);
        break;
      case LayerKind::residual_block:
        w.u32(l.in);
        w.u32(l.kernel);
        break;
      case LayerKind::relu:
      case LayerKind::flatten:
        break;
    }
    for (const Tensor& p : l.params) w.tensor(p);
  }
  w.u32(net.input_shape().size());
  for (std::size_t d : net.input_shape()) w.u32(d);
  if (!out) throw IoError("failed writing SLNN stream");
}

Network read_network(std::istream& in) {
  Reader r(in);
  const std::uint32_t count = r.header();
  if (count == 0) throw FormatError("SLNN stream holds a tensor dump, not a network", 8);
  std::vector<LayerSpec> layers;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint64_t at = r.offset();
    const std::uint8_t code = r.u8();
    if (!is_valid_kind_code(code)) throw FormatError("unknown layer kind code " + std::to_string(code), at);
    LayerSpec l;
    switch (static_cast<LayerKind>(code)) {
      case LayerKind::dense: {
        const auto in_f = r.u32();
        l = LayerSpec::dense(in_f, r.u32());
        break;
      }
      case LayerKind::conv2d: {
        const auto in_c = r.u32();
        const auto out_c = r.u32();
        const auto k = r.u32();
        const auto s = r.u32();
        l = LayerSpec::conv2d(in_c, out_c, k, s, r.u32());
        break;
      }
      case LayerKind::avgpool2d: {
        const auto win = r.u32();
        const auto s = r.u32();
        if (win == 0 || s == 0) throw FormatError("zero pooling window or stride", at);
        l = LayerSpec::avgpool2d(win, s);
        break;
      }
      case LayerKind::residual_block: {
        const auto ch = r.u32();
        l = LayerSpec::residual_block(ch, r.u32());
        break;
      }
      case LayerKind::relu:
        l = LayerSpec::relu();
        break;
      case LayerKind::flatten:
        l = LayerSpec::flatten();
        break;
    }
    const std::size_t n_params = l.param_shapes().size();
    for (std::size_t p = 0; p < n_params; ++p) l.params.push_back(r.tensor());
    layers.push_back(std::move(l));
  }
  Shape input = r.shape();
  try {
    return Network(std::move(input), std::move(layers));
  } catch (const ConfigError& e) {
    throw FormatError(std::string("checkpoint does not describe a valid network: ") + e.what(), r.offset());
  }
}

void save_network(const std::filesystem::path& path, const Network& net) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_network(out, net);
  out.flush();
  if (!out) throw IoError("failed writing " + path.string());
}

Network load_network(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifactError("cannot open checkpoint " + path.string());
  return read_network(in);
}

void write_tensors(std::ostream& out, const std::vector<Tensor>& tensors) {
  Writer w(out);
  w.header(0);
  w.u32(tensors.size());
  for (const Tensor& t : tensors) w.tensor(t);
  if (!out) throw IoError("failed writing SLNN tensor dump");
}

std::vector<Tensor> read_tensors(std::istream& in) {
  Reader r(in);
  if (r.header() != 0) throw FormatError("SLNN stream holds a network, not a tensor dump", 8);
  const std::uint32_t count = r.u32();
  std::vector<Tensor> out;
  for (std::uint32_t i = 0; i < count; ++i) out.push_back(r.tensor());
  return out;
}

void save_tensors(const std::filesystem::path& path, const std::vector<Tensor>& tensors) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_tensors(out, tensors);
  out.flush();
  if (!out) throw IoError("failed writing " + path.string());
}

std::vector<Tensor> load_tensors(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifactError("cannot open tensor dump " + path.string());
  return read_tensors(in);
}

}  // namespace sladv::nn
