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

#ifndef SLADV_DATA_HPP_
#define SLADV_DATA_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "sladv/rng.hpp"
#include "sladv/tensor.hpp"

namespace sladv::data {

// Images are [N, C, H, W] with values in [0, 1].
struct Dataset {
  nn::Tensor images;
  std::vector<std::size_t> labels;
  std::size_t class_count = 0;

  std::size_t size() const { return labels.size(); }
  nn::Shape image_shape() const { return images.sample_shape(); }
  Dataset subset(std::span<const std::size_t> indices) const;
  nn::Tensor batch_images(std::span<const std::size_t> indices) const;
  std::vector<std::size_t> batch_labels(std::span<const std::size_t> indices) const;
  // Throws InputError when an invariant is broken.
  void validate() const;
};

// IDX image/label pair (optionally gzip-compressed). Pixels are scaled by
// 1/255. Throws FormatError carrying the failing byte offset.
Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels);

enum class Generator { blobs, bars, digits };
std::string_view generator_name(Generator g);
Generator generator_from_name(std::string_view name);  // throws ConfigError

struct SynthSpec {
  std::size_t classes = 10;
  std::size_t size = 12;  // square image side
  std::size_t samples_per_class = 100;
  Generator generator = Generator::digits;
  double noise = 0.05;  // std-dev of additive pixel noise
};

// Deterministic class-conditional single-channel images. Classes are
// interleaved so any prefix is roughly balanced.
Dataset synth_task(const SynthSpec& spec, std::uint64_t seed);

enum class PartitionScheme { iid, label_shards, dirichlet };
enum class AttackerSource { same_distribution, shifted_distribution };

struct PartitionPlan {
  std::size_t n_clients = 10;
  PartitionScheme scheme = PartitionScheme::iid;
  std::size_t labels_per_client = 2;  // label_shards
  double concentration = 0.5;         // dirichlet
  double client_fraction = 1.0;       // share of the dataset handed to clients
  AttackerSource attacker_source = AttackerSource::shifted_distribution;
  std::size_t attacker_pool_size = 0;
  SynthSpec shifted_spec{.generator = Generator::bars};  // shifted pool generator
  std::uint64_t seed = 0;
};

struct Partition {
  std::vector<Dataset> clients;
  Dataset attacker_pool;
  std::vector<std::vector<std::size_t>> client_indices;  // into the source dataset
  std::vector<std::size_t> attacker_indices;              // empty for shifted pools
};

// Client shards are disjoint; a same-distribution attacker pool is drawn from
// samples no client holds. Throws InputError when there are too few samples.
Partition partition(const Dataset& ds, const PartitionPlan& plan);

// Epoch-shuffled minibatch indices over [0, n).
class BatchSampler {
 public:
  BatchSampler(std::size_t n, std::size_t batch_size, std::uint64_t seed);
  std::vector<std::size_t> next() { return next(batch_size_); }
  std::vector<std::size_t> next(std::size_t count);

 private:
  void reshuffle();

  std::size_t batch_size_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
  Rng rng_;
};

}  // namespace sladv::data

#endif  // SLADV_DATA_HPP_
