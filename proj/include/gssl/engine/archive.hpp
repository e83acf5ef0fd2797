// Copyright (c) 2026 The guided-ssl Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "gssl/numerics/tensor.hpp"

namespace gssl::engine {

/// Container shared by checkpoints: a JSON header followed by named tensor
/// blocks. Layout (all integers unsigned 64-bit little-endian):
///
///   magic "GSSLCKPT" | header length | header JSON (UTF-8)
///   per tensor: name length | name | rank | dims... | values as IEEE-754 f64 LE
///
/// The header carries a "tensors" array of {name, shape} in block order.
struct TensorArchive {
  nlohmann::json header = nlohmann::json::object();
  std::vector<std::pair<std::string, Tensor>> tensors;

  const Tensor& at(const std::string& name) const;
  bool contains(const std::string& name) const;
};

std::vector<std::uint8_t> encode_archive(const TensorArchive& archive);
/// Throws DecodeError on bad magic, truncation, or a header/block mismatch.
TensorArchive decode_archive(const std::vector<std::uint8_t>& bytes);

void save_archive(const std::filesystem::path& path, const TensorArchive& archive);
TensorArchive load_archive(const std::filesystem::path& path);

/// 64-bit FNV-1a; used for content ids of checkpoints, manifests and features.
std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a(const Tensor& t);
std::string hex64(std::uint64_t v);

}  // namespace gssl::engine
