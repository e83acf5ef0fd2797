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

#include <nlohmann/json.hpp>

#include "gssl/augment/guided_crop.hpp"
#include "gssl/engine/optimizer.hpp"
#include "gssl/engine/schedules.hpp"
#include "gssl/model/vit.hpp"
#include "gssl/ssl/objectives.hpp"

namespace gssl::engine {

struct TrainConfig {
  std::size_t batch_size = 16;
  std::size_t steps = 200;  // total optimizer steps; 0 means derive from epochs
  std::size_t epochs = 0;
  double warmup_frac = 0.1;
  double base_lr = 4e-3;
  AdamWConfig adamw;
  double grad_clip = 3.0;  // 0 disables
  std::uint64_t seed = 0;
  augment::Range mask_ratio{0.1, 0.5};
  std::size_t checkpoint_every = 0;  // 0: only the final checkpoint
  MomentumSchedule momentum;

  void validate() const;
  std::size_t batches_per_epoch(std::size_t records) const { return (records + batch_size - 1) / batch_size; }
  std::size_t total_steps(std::size_t records) const;
};

struct LossConfig {
  ssl::Temperatures temperatures;
  ssl::LossWeights weights;
  double center_momentum = 0.9;
  bool raw_sum = false;  // sum instead of average over image-loss view pairs

  void validate() const;
};

/// Everything `pretrain` needs; unknown keys anywhere are rejected.
struct RunConfig {
  std::string manifest;    // resolved against the config file's directory
  std::string output_dir;  // optional; the command line may override it
  model::ViTConfig model;
  augment::MultiCropConfig augment;
  TrainConfig train;
  LossConfig loss;

  /// Component checks plus cross-checks (view sizes must be model sizes).
  void validate() const;
};

RunConfig parse_run_config(const nlohmann::json& j);
/// Throws ConfigError (key "config") for unreadable or malformed files.
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::json run_config_to_json(const RunConfig& c);

}  // namespace gssl::engine
