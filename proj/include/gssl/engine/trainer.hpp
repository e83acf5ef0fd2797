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

#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gssl/data/dataset.hpp"
#include "gssl/engine/archive.hpp"
#include "gssl/engine/config.hpp"

namespace gssl::engine {

struct TrainState {
  model::ParamSet student;  // backbone and head
  model::ParamSet teacher;  // same layout; only ever written by ema_update
  ssl::CenterState center;
  OptimizerState opt;
  std::size_t step = 0;  // completed steps
};

/// Student from the seeded init, teacher as an exact copy, zero center and moments.
TrainState init_state(const RunConfig& cfg);

struct StepReport {
  std::size_t step = 0;
  double L_image = 0, L_patch = 0, L_koleo = 0, L_total = 0;
  double lr = 0, lambda = 0, tau_t = 0;
  double grad_norm = 0;
  std::size_t teacher_grads = 0;  // teacher leaves holding a gradient after backward

  /// One line of the JSON-lines training log.
  std::string log_line() const;
};

/// iBOT mask: ratio ~ U[ratio.lo, ratio.hi], round(ratio n) indices (at least
/// one) drawn without replacement, returned sorted.
std::vector<std::size_t> sample_mask(Rng& rng, std::size_t n, augment::Range ratio);

/// One optimizer step on `images` (their manifest indices in `ids` seed the
/// per-image augmentation). Schedules are evaluated at state.step.
StepReport train_step(const RunConfig& cfg, std::span<const GrayscaleImage* const> images,
                      std::span<const std::size_t> ids, TrainState& state, std::size_t total_steps);

/// Mean over dimensions of the per-dimension (population) standard deviation
/// of the rows of `probs`. Needs at least two rows.
double collapse_metric(const Tensor& probs);

/// Teacher class-token prototype distributions of the deterministic content views.
Tensor teacher_class_distributions(const RunConfig& cfg, const TrainState& state,
                                   std::span<const GrayscaleImage> images, double tau_t);

TensorArchive make_checkpoint(const RunConfig& cfg, const TrainState& state, std::size_t total_steps);

struct LoadedCheckpoint {
  RunConfig config;
  TrainState state;
  std::size_t total_steps = 0;
  std::string id;  // content hash of the file
};

LoadedCheckpoint restore_checkpoint(const TensorArchive& archive);
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);
void save_checkpoint(const std::filesystem::path& path, const RunConfig& cfg, const TrainState& state,
                     std::size_t total_steps);
std::filesystem::path checkpoint_name(std::size_t step);

struct PretrainOptions {
  std::filesystem::path out_dir;  // empty: keep everything in memory
  std::optional<std::filesystem::path> resume;
  std::function<void(const StepReport&)> on_step;
};

struct PretrainResult {
  TrainState state;
  std::vector<StepReport> reports;  // steps run by this call only
  std::size_t total_steps = 0;
  double collapse = 0;
  std::filesystem::path final_checkpoint;
};

/// Runs state.step .. total-1. With an out_dir, appends to train_log.jsonl
/// (dropping lines at or beyond a resume step), writes checkpoints on the
/// cadence and at the end, and a summary.json.
PretrainResult pretrain(const RunConfig& cfg, const DatasetManifest& manifest, const PretrainOptions& opts = {});

}  // namespace gssl::engine
