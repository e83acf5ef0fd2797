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
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "gssl/data/image.hpp"
#include "gssl/data/phantom.hpp"

namespace gssl {

struct PhantomSource {
  PhantomSpec spec;
  std::optional<std::uint64_t> seed;  // render seed; derived from the manifest seed if absent
};

struct ManifestRecord {
  std::variant<std::filesystem::path, PhantomSource> source;
  std::optional<int> label;
  std::optional<BoundingBox> box;  // ground truth written by the phantom generator
};

/// Ordered records plus a global seed. Labels, when present, are dense 0..C-1.
struct DatasetManifest {
  std::uint64_t seed = 0;
  std::vector<ManifestRecord> records;
  std::filesystem::path base_dir;  // relative image paths resolve against this

  void validate() const;
  /// Number of distinct labels (0 when unlabeled).
  int class_count() const;
  GrayscaleImage load(std::size_t index) const;
};

DatasetManifest parse_manifest(const nlohmann::json& j, std::filesystem::path base_dir = {});
DatasetManifest load_manifest(const std::filesystem::path& path);
nlohmann::json manifest_to_json(const DatasetManifest& m);

/// Record indices of every batch of `epoch`: a permutation seeded by
/// (seed, epoch), cut into batches of `batch_size`; the final short batch is kept.
std::vector<std::vector<std::size_t>> epoch_batches(std::size_t record_count, std::size_t batch_size,
                                                    std::uint64_t seed, std::uint64_t epoch);

struct ImageBatch {
  std::vector<std::size_t> indices;
  std::vector<GrayscaleImage> images;
  std::vector<std::optional<int>> labels;
};

/// Streams the batches of one epoch in order.
class BatchIterator {
 public:
  BatchIterator(const DatasetManifest& manifest, std::size_t batch_size, std::uint64_t epoch);
  std::optional<ImageBatch> next();

 private:
  const DatasetManifest& manifest_;
  std::vector<std::vector<std::size_t>> batches_;
  std::size_t cursor_ = 0;
};

}  // namespace gssl
