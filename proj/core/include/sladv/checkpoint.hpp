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

#ifndef SLADV_CHECKPOINT_HPP_
#define SLADV_CHECKPOINT_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "sladv/network.hpp"

namespace sladv::nn {

// SLNN container, little-endian:
//
//   "SLNN"  magic
//   u32     format version (1)
//   u32     layer count L
//   L x layer:
//     u8    kind code (LayerKind)
//     u32[] hyperparameters, fixed per kind:
//             dense          in, out
//             conv2d         in, out, kernel, stride, padding
//             avgpool2d      window, stride
//             residual-block channels, kernel
//             relu, flatten  (none)
//     tensor[] parameters, count fixed per kind
//   u32 ndim, u32[ndim]   per-sample input shape of the network
//
// tensor := u32 ndim, u32[ndim] dims, f64[prod(dims)] payload.
//
// A tensor dump is the same header with L = 0, followed by u32 count and
// that many tensors.
inline constexpr std::uint32_t kSlnnVersion = 1;

void write_network(std::ostream& out, const Network& net);
Network read_network(std::istream& in);
void save_network(const std::filesystem::path& path, const Network& net);
Network load_network(const std::filesystem::path& path);

void write_tensors(std::ostream& out, const std::vector<Tensor>& tensors);
std::vector<Tensor> read_tensors(std::istream& in);
void save_tensors(const std::filesystem::path& path, const std::vector<Tensor>& tensors);
std::vector<Tensor> load_tensors(const std::filesystem::path& path);

}  // namespace sladv::nn

#endif  // SLADV_CHECKPOINT_HPP_
