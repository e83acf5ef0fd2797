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
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gssl/data/dataset.hpp"
#include "gssl/engine/trainer.hpp"

namespace gssl::probe {

/// Frozen class-token features with their labels and provenance.
struct FrozenFeatureSet {
  Tensor features;  // [N x d]
  std::vector<int> labels;
  std::string checkpoint_id;
  std::string manifest_hash;
  std::uint64_t content_hash = 0;  // of features and labels at extraction time

  std::uint64_t compute_hash() const;
  /// Throws ValidationError if the features changed since extraction.
  void verify() const;
  int class_count() const;
};

/// Content-box view at the global size, teacher encode, class token. Every
/// record must be labeled.
FrozenFeatureSet extract_features(const engine::RunConfig& cfg, const engine::TrainState& state,
                                  const DatasetManifest& manifest, const std::string& checkpoint_id = {});
FrozenFeatureSet extract_features(const engine::LoadedCheckpoint& ckpt, const DatasetManifest& manifest);

struct ProbeConfig {
  double lr = 0.1;
  std::size_t iterations = 500;
  bool standardize = true;  // z-score features with training statistics
};

/// Multinomial logistic regression. Weights start at zero.
struct LinearProbe {
  Tensor weight;  // [d x C]
  Tensor bias;    // [C]
  Tensor mean;    // [d] feature standardization
  Tensor scale;   // [d]
  ProbeConfig config;

  std::size_t classes() const { return bias.size(); }
  Tensor logits(const Tensor& features) const;
  Tensor probabilities(const Tensor& features) const;
  /// Argmax with ties broken toward the lowest class index.
  std::vector<int> predict(const Tensor& features) const;
};

/// Full-batch gradient descent on the mean cross-entropy; only probe
/// weights change. Throws ValidationError for fewer than two classes.
LinearProbe train_linear_probe(const FrozenFeatureSet& data, const ProbeConfig& cfg = {});

/// Pairwise rank statistic with ties counted one half. Throws
/// ValidationError when either class is absent or lengths differ.
double auroc(std::span<const double> scores, std::span<const int> labels);

/// Fraction of exact matches; throws ValidationError on length mismatch or N = 0.
double accuracy(std::span<const int> predictions, std::span<const int> labels);

struct MetricReport {
  std::string metric;
  double value = 0;
  std::size_t n = 0;
  int classes = 0;
  std::uint64_t seed = 0;

  nlohmann::ordered_json to_json() const;
};

/// Binary tasks score with P(class 1); with more classes AUROC is the
/// one-vs-rest macro average.
MetricReport evaluate(const LinearProbe& probe, const FrozenFeatureSet& eval, const std::string& metric,
                      std::uint64_t seed);

}  // namespace gssl::probe
