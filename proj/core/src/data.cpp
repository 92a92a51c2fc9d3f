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

#include "sladv/data.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <numbers>
#include <string>

#include "sladv/errors.hpp"

namespace sladv::data {

using nn::Shape;
using nn::Tensor;

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.images = nn::gather_samples(images, indices);
  out.labels = batch_labels(indices);
  out.class_count = class_count;
  return out;
}

Tensor Dataset::batch_images(std::span<const std::size_t> indices) const {
  return nn::gather_samples(images, indices);
}

std::vector<std::size_t> Dataset::batch_labels(std::span<const std::size_t> indices) const {
  std::vector<std::size_t> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(labels.at(i));
  return out;
}

void Dataset::validate() const {
  if (images.rank() != 4) throw InputError("dataset images must be [N,C,H,W], got " + nn::shape_string(images.shape()));
  if (images.batch() != labels.size()) throw InputError("image and label counts differ");
  for (std::size_t y : labels) {
    if (y >= class_count) throw InputError("label " + std::to_string(y) + " exceeds class count");
  }
  for (double v : images.data()) {
    if (!(v >= 0.0 && v <= 1.0)) throw InputError("pixel outside [0, 1]");
  }
}

// ---------------------------------------------------------------- IDX files

namespace {

struct GzCloser {
  void operator()(gzFile f) const { gzclose(f); }
};
using GzHandle = std::unique_ptr<gzFile_s, GzCloser>;

class IdxReader {
 public:
  explicit IdxReader(const std::filesystem::path& path) : path_(path.string()) {
    file_.reset(gzopen(path_.c_str(), "rb"));
    if (!file_) throw IoError("cannot open " + path_);
  }

  void read(unsigned char* dst, std::size_t n) {
    const int got = gzread(file_.get(), dst, static_cast<unsigned>(n));
    if (got < 0 || static_cast<std::size_t>(got) != n) {
      throw FormatError(path_ + ": truncated IDX file", offset_ + (got > 0 ? got : 0));
    }
    offset_ += n;
  }

  std::uint32_t u32_be() {
    unsigned char b[4];
    read(b, 4);
    return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) | b[3];
  }

  std::uint64_t offset() const { return offset_; }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  GzHandle file_;
  std::uint64_t offset_ = 0;
};

}  // namespace

Dataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path) {
  IdxReader images(images_path);
  if (images.u32_be() != 0x00000803u) throw FormatError(images.path() + ": bad IDX image magic", 0);
  const std::uint32_t n = images.u32_be();
  const std::uint32_t h = images.u32_be();
  const std::uint32_t w = images.u32_be();
  if (n == 0 || h == 0 || w == 0) throw FormatError(images.path() + ": zero IDX dimension", 4);

  IdxReader labels(labels_path);
  if (labels.u32_be() != 0x00000801u) throw FormatError(labels.path() + ": bad IDX label magic", 0);
  const std::uint32_t n_labels = labels.u32_be();
  if (n_labels != n) {
    throw FormatError("IDX image count " + std::to_string(n) + " does not match label count " +
                          std::to_string(n_labels),
                      4);
  }

  Dataset ds;
  ds.images = Tensor({n, 1, h, w});
  std::vector<unsigned char> pixels(static_cast<std::size_t>(h) * w);
  for (std::uint32_t i = 0; i < n; ++i) {
    images.read(pixels.data(), pixels.size());
    auto dst = ds.images.sample(i);
    for (std::size_t p = 0; p < pixels.size(); ++p) dst[p] = pixels[p] / 255.0;
  }
  ds.labels.resize(n);
  std::size_t max_label = 0;
  for (std::uint32_t i = 0; i < n; ++i) {
    unsigned char y = 0;
    labels.read(&y, 1);
    ds.labels[i] = y;
    max_label = std::max<std::size_t>(max_label, y);
  }
  ds.class_count = max_label + 1;
  return ds;
}

// ---------------------------------------------------------- synthetic tasks

std::string_view generator_name(Generator g) {
  switch (g) {
    case Generator::blobs: return "blobs";
    case Generator::bars: return "bars";
    case Generator::digits: return "digits";
  }
  return "unknown";
}

Generator generator_from_name(std::string_view name) {
  for (auto g : {Generator::blobs, Generator::bars, Generator::digits}) {
    if (generator_name(g) == name) return g;
  }
  throw ConfigError("unknown generator '" + std::string(name) + "'");
}

namespace {

class Canvas {
 public:
  Canvas(std::span<double> pixels, std::size_t size) : px_(pixels), size_(size) {}

  void put(long x, long y, double v) {
    if (x < 0 || y < 0 || x >= static_cast<long>(size_) || y >= static_cast<long>(size_)) return;
    double& p = px_[static_cast<std::size_t>(y) * size_ + static_cast<std::size_t>(x)];
    p = std::max(p, v);
  }
  void hline(long x0, long x1, long y, long thick, double v) {
    for (long t = 0; t < thick; ++t)
      for (long x = x0; x <= x1; ++x) put(x, y + t, v);
  }
  void vline(long x, long y0, long y1, long thick, double v) {
    for (long t = 0; t < thick; ++t)
      for (long y = y0; y <= y1; ++y) put(x + t, y, v);
  }

 private:
  std::span<double> px_;
  std::size_t size_;
};

// Seven-segment masks, bit order a b c d e f g.
constexpr std::array<unsigned, 10> kSegments = {
    0b1111110, 0b0110000, 0b1101101, 0b1111001, 0b0110011,
    0b1011011, 0b1011111, 0b1110000, 0b1111111, 0b1111011,
};

long jitter(Rng& rng, long radius) { return static_cast<long>(rng.index(2 * radius + 1)) - radius; }

void draw_digit(Canvas& c, std::size_t label, std::size_t size, Rng& rng) {
  const long s = static_cast<long>(size);
  const long gw = std::max<long>(3, s * 5 / 12);
  const long gh = std::max<long>(5, s * 9 / 12);
  const long thick = std::max<long>(1, s / 12);
  const long x0 = std::clamp((s - gw) / 2 + jitter(rng, std::max<long>(1, s / 6)), 0L, s - gw);
  const long y0 = std::clamp((s - gh) / 2 + jitter(rng, 1), 0L, s - gh);
  const double v = rng.uniform(0.6, 1.0);
  const long mid = y0 + gh / 2, bottom = y0 + gh - thick, right = x0 + gw - thick;
  const unsigned mask = kSegments[label];
  auto on = [&](int bit) { return (mask >> (6 - bit)) & 1u; };
  if (on(0)) c.hline(x0, x0 + gw - 1, y0, thick, v);
  if (on(1)) c.vline(right, y0, mid, thick, v);
  if (on(2)) c.vline(right, mid, y0 + gh - 1, thick, v);
  if (on(3)) c.hline(x0, x0 + gw - 1, bottom, thick, v);
  if (on(4)) c.vline(x0, mid, y0 + gh - 1, thick, v);
  if (on(5)) c.vline(x0, y0, mid, thick, v);
  if (on(6)) c.hline(x0, x0 + gw - 1, mid, thick, v);
}

void draw_bar(Canvas& c, std::size_t label, std::size_t classes, std::size_t size, Rng& rng) {
  const long s = static_cast<long>(size);
  const long slots = static_cast<long>((classes + 1) / 2);
  const long slot = static_cast<long>(label / 2);
  const long thick = std::max<long>(1, s / 6);
  const long centre = (2 * slot + 1) * s / (2 * slots) + jitter(rng, 0);
  const long pos = std::clamp(centre - thick / 2, 0L, s - thick);
  const long lo = jitter(rng, 1) + 1, hi = s - 2 + jitter(rng, 1);
  const double v = rng.uniform(0.6, 1.0);
  if (label % 2 == 0) {
    c.hline(lo, hi, pos, thick, v);
  } else {
    c.vline(pos, lo, hi, thick, v);
  }
}

void draw_blob(std::span<double> px, std::size_t label, std::size_t classes, std::size_t size, Rng& rng) {
  const double s = static_cast<double>(size);
  const double angle = 2.0 * std::numbers::pi * static_cast<double>(label) / static_cast<double>(classes);
  const double cx = s / 2.0 - 0.5 + s / 3.0 * std::cos(angle) + rng.uniform(-1.0, 1.0);
  const double cy = s / 2.0 - 0.5 + s / 3.0 * std::sin(angle) + rng.uniform(-1.0, 1.0);
  const double sigma = s / 8.0;
  const double v = rng.uniform(0.6, 1.0);
  for (std::size_t y = 0; y < size; ++y) {
    for (std::size_t x = 0; x < size; ++x) {
      const double dx = static_cast<double>(x) - cx, dy = static_cast<double>(y) - cy;
      px[y * size + x] = std::max(px[y * size + x], v * std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma)));
    }
  }
}

}  // namespace

Dataset synth_task(const SynthSpec& spec, std::uint64_t seed) {
  if (spec.classes < 2 || spec.size < 6 || spec.samples_per_class == 0) {
    throw ConfigError("synthetic task needs >= 2 classes, side >= 6 and samples per class > 0");
  }
  if (spec.generator == Generator::digits && spec.classes > kSegments.size()) {
    throw ConfigError("the digits generator supports at most 10 classes");
  }
  if (!(spec.noise >= 0.0)) throw ConfigError("noise must be non-negative");
  const std::size_t n = spec.classes * spec.samples_per_class;
  Dataset ds;
  ds.class_count = spec.classes;
  ds.images = Tensor({n, 1, spec.size, spec.size});
  ds.labels.resize(n);
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t label = i % spec.classes;
    ds.labels[i] = label;
    auto px = ds.images.sample(i);
    Canvas canvas(px, spec.size);
    switch (spec.generator) {
      case Generator::digits:
        draw_digit(canvas, label, spec.size, rng);
        break;
      case Generator::bars:
        draw_bar(canvas, label, spec.classes, spec.size, rng);
        break;
      case Generator::blobs:
        draw_blob(px, label, spec.classes, spec.size, rng);
        break;
    }
    for (double& p : px) p = std::clamp(p + spec.noise * rng.normal(), 0.0, 1.0);
  }
  return ds;
}

// ---------------------------------------------------------------- partition

namespace {

std::vector<std::vector<std::size_t>> split_iid(std::vector<std::size_t> pool, std::size_t clients, Rng& rng) {
  rng.shuffle(std::span<std::size_t>(pool));
  const std::size_t per = pool.size() / clients;
  std::vector<std::vector<std::size_t>> shards(clients);
  for (std::size_t c = 0; c < clients; ++c) {
    shards[c].assign(pool.begin() + static_cast<std::ptrdiff_t>(c * per),
                     pool.begin() + static_cast<std::ptrdiff_t>((c + 1) * per));
  }
  return shards;
}

std::vector<std::vector<std::size_t>> by_label(const Dataset& ds, const std::vector<std::size_t>& pool) {
  std::vector<std::vector<std::size_t>> out(ds.class_count);
  for (std::size_t i : pool) out[ds.labels[i]].push_back(i);
  return out;
}

// Client c owns labels (c * L + j) mod classes; a label's samples are split
// evenly between its owners.
std::vector<std::vector<std::size_t>> split_label_shards(const Dataset& ds, const std::vector<std::size_t>& pool,
                                                         std::size_t clients, std::size_t per_client, Rng& rng) {
  if (per_client == 0 || per_client > ds.class_count) {
    throw ConfigError("labels_per_client must lie in [1, class count]");
  }
  auto classes = by_label(ds, pool);
  std::vector<std::vector<std::size_t>> owners(ds.class_count);
  for (std::size_t c = 0; c < clients; ++c) {
    for (std::size_t j = 0; j < per_client; ++j) owners[(c * per_client + j) % ds.class_count].push_back(c);
  }
  std::vector<std::vector<std::size_t>> shards(clients);
  for (std::size_t label = 0; label < ds.class_count; ++label) {
    auto& members = classes[label];
    rng.shuffle(std::span<std::size_t>(members));
    const auto& who = owners[label];
    if (who.empty()) continue;
    const std::size_t per = members.size() / who.size();
    if (per == 0) throw InputError("not enough samples of label " + std::to_string(label) + " for its owners");
    for (std::size_t k = 0; k < who.size(); ++k) {
      shards[who[k]].insert(shards[who[k]].end(), members.begin() + static_cast<std::ptrdiff_t>(k * per),
                            members.begin() + static_cast<std::ptrdiff_t>((k + 1) * per));
    }
  }
  return shards;
}

std::vector<std::vector<std::size_t>> split_dirichlet(const Dataset& ds, const std::vector<std::size_t>& pool,
                                                      std::size_t clients, double concentration, Rng& rng) {
  if (!(concentration > 0.0)) throw ConfigError("dirichlet concentration must be positive");
  auto classes = by_label(ds, pool);
  std::vector<std::vector<std::size_t>> shards(clients);
  for (auto& members : classes) {
    rng.shuffle(std::span<std::size_t>(members));
    std::vector<double> share(clients);
    double total = 0.0;
    for (double& s : share) total += (s = rng.gamma(concentration));
    std::size_t start = 0;
    double acc = 0.0;
    for (std::size_t c = 0; c < clients; ++c) {
      acc += share[c] / total;
      const std::size_t end =
          c + 1 == clients ? members.size()
                           : std::min(members.size(), static_cast<std::size_t>(std::llround(acc * members.size())));
      shards[c].insert(shards[c].end(), members.begin() + static_cast<std::ptrdiff_t>(start),
                       members.begin() + static_cast<std::ptrdiff_t>(end));
      start = std::max(start, end);
    }
  }
  return shards;
}

}  // namespace

Partition partition(const Dataset& ds, const PartitionPlan& plan) {
  if (plan.n_clients == 0) throw ConfigError("partition needs at least one client");
  if (!(plan.client_fraction > 0.0 && plan.client_fraction <= 1.0)) {
    throw ConfigError("client_fraction must lie in (0, 1]");
  }
  Rng rng(plan.seed);
  std::vector<std::size_t> order(ds.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(std::span<std::size_t>(order));
  const auto client_total = static_cast<std::size_t>(std::floor(plan.client_fraction * ds.size() + 1e-9));
  if (client_total < plan.n_clients) throw InputError("not enough samples for " + std::to_string(plan.n_clients) + " clients");
  std::vector<std::size_t> client_pool(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(client_total));

  Partition out;
  switch (plan.scheme) {
    case PartitionScheme::iid:
      out.client_indices = split_iid(client_pool, plan.n_clients, rng);
      break;
    case PartitionScheme::label_shards:
      out.client_indices = split_label_shards(ds, client_pool, plan.n_clients, plan.labels_per_client, rng);
      break;
    case PartitionScheme::dirichlet:
      out.client_indices = split_dirichlet(ds, client_pool, plan.n_clients, plan.concentration, rng);
      break;
  }
  std::vector<char> taken(ds.size(), 0);
  for (const auto& shard : out.client_indices) {
    if (shard.empty()) throw InputError("partition left a client without samples");
    for (std::size_t i : shard) taken[i] = 1;
    out.clients.push_back(ds.subset(shard));
  }

  if (plan.attacker_source == AttackerSource::same_distribution) {
    for (std::size_t i : order) {
      if (out.attacker_indices.size() == plan.attacker_pool_size) break;
      if (!taken[i]) out.attacker_indices.push_back(i);
    }
    if (out.attacker_indices.size() < plan.attacker_pool_size) {
      throw InputError("only " + std::to_string(out.attacker_indices.size()) +
                       " samples remain for an attacker pool of " + std::to_string(plan.attacker_pool_size));
    }
    if (!out.attacker_indices.empty()) out.attacker_pool = ds.subset(out.attacker_indices);
  } else if (plan.attacker_pool_size > 0) {
    SynthSpec spec = plan.shifted_spec;
    spec.size = ds.images.dim(2);
    spec.samples_per_class = (plan.attacker_pool_size + spec.classes - 1) / spec.classes;
    Dataset shifted = synth_task(spec, Rng::derive(plan.seed, 0x5a17));
    std::vector<std::size_t> keep(plan.attacker_pool_size);
    for (std::size_t i = 0; i < keep.size(); ++i) keep[i] = i;
    out.attacker_pool = shifted.subset(keep);
  }
  return out;
}

BatchSampler::BatchSampler(std::size_t n, std::size_t batch_size, std::uint64_t seed)
    : batch_size_(batch_size), order_(n), rng_(seed) {
  if (n == 0) throw InputError("cannot sample batches from an empty dataset");
  if (batch_size == 0) throw ConfigError("batch size must be positive");
  for (std::size_t i = 0; i < n; ++i) order_[i] = i;
  reshuffle();
}

void BatchSampler::reshuffle() {
  rng_.shuffle(std::span<std::size_t>(order_));
  cursor_ = 0;
}

std::vector<std::size_t> BatchSampler::next(std::size_t count) {
  std::vector<std::size_t> batch;
  batch.reserve(count);
  while (batch.size() < count) {
    if (cursor_ == order_.size()) reshuffle();
    batch.push_back(order_[cursor_++]);
  }
  return batch;
}

}  // namespace sladv::data
