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


#include "gssl/data/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>

#include "gssl/errors.hpp"
#include "gssl/json_util.hpp"
#include "gssl/numerics/rng.hpp"

namespace gssl {

void DatasetManifest::validate() const {
  if (records.empty()) throw ValidationError("manifest has no records");
  std::set<int> labels;
  for (const auto& r : records) {
    if (r.label) {
      if (*r.label < 0) throw ValidationError("manifest labels must be nonnegative");
      labels.insert(*r.label);
    }
  }
  if (!labels.empty() && *labels.rbegin() != static_cast<int>(labels.size()) - 1)
    throw ValidationError("manifest labels must be dense integers 0..C-1");
}

int DatasetManifest::class_count() const {
  int c = 0;
  for (const auto& r : records)
    if (r.label) c = std::max(c, *r.label + 1);
  return c;
}

GrayscaleImage DatasetManifest::load(std::size_t index) const {
  const auto& rec = records.at(index);
  if (const auto* path = std::get_if<std::filesystem::path>(&rec.source)) {
    auto img = load_image(path->is_absolute() ? *path : base_dir / *path);
    img.validate();
    return img;
  }
  const auto& ph = std::get<PhantomSource>(rec.source);
  return generate_phantom(ph.spec, ph.seed.value_or(derive_seed({seed, index}))).image;
}

DatasetManifest parse_manifest(const nlohmann::json& j, std::filesystem::path base_dir) {
  json_util::reject_unknown_keys(j, {"seed", "records"}, "manifest");
  DatasetManifest m;
  m.base_dir = std::move(base_dir);
  json_util::read_optional(j, "seed", m.seed, "manifest");
  if (!j.contains("records") || !j.at("records").is_array())
    throw ValidationError("manifest.records must be an array");
  for (const auto& rj : j.at("records")) {
    json_util::reject_unknown_keys(rj, {"path", "phantom", "seed", "label", "box"}, "manifest.records");
    ManifestRecord rec;
    if (rj.contains("path") == rj.contains("phantom"))
      throw ValidationError("each manifest record needs exactly one of \"path\" or \"phantom\"");
    if (rj.contains("path")) {
      rec.source = std::filesystem::path(rj.at("path").get<std::string>());
    } else {
      PhantomSource ph;
      try {
        ph.spec = rj.at("phantom").get<PhantomSpec>();
      } catch (const nlohmann::json::exception& e) {
        throw ConfigError("manifest.records.phantom", e.what());
      }
      if (rj.contains("seed")) ph.seed = rj.at("seed").get<std::uint64_t>();
      rec.source = std::move(ph);
    }
    if (rj.contains("label")) rec.label = rj.at("label").get<int>();
    if (rj.contains("box")) {
      const auto b = rj.at("box").get<std::vector<std::size_t>>();
      if (b.size() != 4) throw ValidationError("manifest box must be [x_min, y_min, x_max, y_max]");
      rec.box = BoundingBox{b[0], b[1], b[2], b[3]};
    }
    m.records.push_back(std::move(rec));
  }
  m.validate();
  return m;
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open manifest " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("", std::string("malformed manifest JSON: ") + e.what());
  }
  return parse_manifest(j, path.parent_path());
}

nlohmann::json manifest_to_json(const DatasetManifest& m) {
  nlohmann::json records = nlohmann::json::array();
  for (const auto& r : m.records) {
    nlohmann::json rj;
    if (const auto* p = std::get_if<std::filesystem::path>(&r.source)) {
      rj["path"] = p->generic_string();
    } else {
      const auto& ph = std::get<PhantomSource>(r.source);
      rj["phantom"] = ph.spec;
      if (ph.seed) rj["seed"] = *ph.seed;
    }
    if (r.label) rj["label"] = *r.label;
    if (r.box) rj["box"] = {r.box->x_min, r.box->y_min, r.box->x_max, r.box->y_max};
    records.push_back(std::move(rj));
  }
  return {{"seed", m.seed}, {"records", records}};
}

std::vector<std::vector<std::size_t>> epoch_batches(std::size_t record_count, std::size_t batch_size,
                                                    std::uint64_t seed, std::uint64_t epoch) {
  if (record_count == 0) throw ValidationError("cannot batch an empty manifest");
  if (batch_size == 0) throw ValidationError("batch size must be at least 1");
  std::vector<std::size_t> order(record_count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed({seed, epoch, 0x5348554646ULL}));
  for (std::size_t i = record_count - 1; i > 0; --i)
    std::swap(order[i], order[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i)))]);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t b = 0; b < record_count; b += batch_size)
    batches.emplace_back(order.begin() + b, order.begin() + std::min(record_count, b + batch_size));
  return batches;
}

BatchIterator::BatchIterator(const DatasetManifest& manifest, std::size_t batch_size, std::uint64_t epoch)
    : manifest_(manifest) {
  manifest.validate();
  batches_ = epoch_batches(manifest.records.size(), batch_size, manifest.seed, epoch);
}

std::optional<ImageBatch> BatchIterator::next() {
  if (cursor_ >= batches_.size()) return std::nullopt;
  ImageBatch b;
  b.indices = batches_[cursor_++];
  for (auto i : b.indices) {
    b.images.push_back(manifest_.load(i));
    b.labels.push_back(manifest_.records[i].label);
  }
  return b;
}

}  // namespace gssl
