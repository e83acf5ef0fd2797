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


#include "gssl/engine/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "gssl/errors.hpp"
#include "gssl/json_util.hpp"

namespace gssl::engine {

using json_util::read_optional;
using json_util::reject_unknown_keys;

namespace {

augment::Range range_from(const nlohmann::json& j, const std::string& key) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw ConfigError(key, "expected [lo, hi]");
  return {j[0].get<double>(), j[1].get<double>()};
}

void train_from(const nlohmann::json& j, TrainConfig& t) {
  reject_unknown_keys(j,
                      {"batch_size", "steps", "epochs", "warmup_frac", "base_lr", "weight_decay", "beta1", "beta2",
                       "adam_eps", "grad_clip", "seed", "mask_ratio", "checkpoint_every", "momentum_start",
                       "momentum_end"},
                      "train");
  read_optional(j, "batch_size", t.batch_size, "train");
  read_optional(j, "steps", t.steps, "train");
  read_optional(j, "epochs", t.epochs, "train");
  read_optional(j, "warmup_frac", t.warmup_frac, "train");
  read_optional(j, "base_lr", t.base_lr, "train");
  read_optional(j, "weight_decay", t.adamw.weight_decay, "train");
  read_optional(j, "beta1", t.adamw.beta1, "train");
  read_optional(j, "beta2", t.adamw.beta2, "train");
  read_optional(j, "adam_eps", t.adamw.eps, "train");
  read_optional(j, "grad_clip", t.grad_clip, "train");
  read_optional(j, "seed", t.seed, "train");
  if (j.contains("mask_ratio")) t.mask_ratio = range_from(j.at("mask_ratio"), "train.mask_ratio");
  read_optional(j, "checkpoint_every", t.checkpoint_every, "train");
  read_optional(j, "momentum_start", t.momentum.start, "train");
  read_optional(j, "momentum_end", t.momentum.end, "train");
}

nlohmann::json train_to(const TrainConfig& t) {
  return {{"batch_size", t.batch_size},
          {"steps", t.steps},
          {"epochs", t.epochs},
          {"warmup_frac", t.warmup_frac},
          {"base_lr", t.base_lr},
          {"weight_decay", t.adamw.weight_decay},
          {"beta1", t.adamw.beta1},
          {"beta2", t.adamw.beta2},
          {"adam_eps", t.adamw.eps},
          {"grad_clip", t.grad_clip},
          {"seed", t.seed},
          {"mask_ratio", {t.mask_ratio.lo, t.mask_ratio.hi}},
          {"checkpoint_every", t.checkpoint_every},
          {"momentum_start", t.momentum.start},
          {"momentum_end", t.momentum.end}};
}

void loss_from(const nlohmann::json& j, LossConfig& l) {
  reject_unknown_keys(j, {"tau_s", "tau_t_start", "tau_t_end", "tau_t_warmup_frac", "center_momentum", "weights", "raw_sum"},
                      "loss");
  from_json(j, l.temperatures);
  if (j.contains("weights")) from_json(j.at("weights"), l.weights);
  read_optional(j, "center_momentum", l.center_momentum, "loss");
  read_optional(j, "raw_sum", l.raw_sum, "loss");
}

nlohmann::json loss_to(const LossConfig& l) {
  nlohmann::json j = l.temperatures;
  j["weights"] = l.weights;
  j["center_momentum"] = l.center_momentum;
  j["raw_sum"] = l.raw_sum;
  return j;
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_size == 0) throw ConfigError("train.batch_size", "must be positive");
  if (steps == 0 && epochs == 0) throw ConfigError("train.steps", "either steps or epochs must be positive");
  if (!(warmup_frac >= 0.0 && warmup_frac <= 1.0)) throw ConfigError("train.warmup_frac", "must lie in [0, 1]");
  if (!(base_lr >= 0.0)) throw ConfigError("train.base_lr", "must be nonnegative");
  adamw.validate();
  if (!(grad_clip >= 0.0)) throw ConfigError("train.grad_clip", "must be nonnegative");
  if (!(mask_ratio.lo > 0.0 && mask_ratio.lo <= mask_ratio.hi && mask_ratio.hi <= 1.0))
    throw ConfigError("train.mask_ratio", "need 0 < lo <= hi <= 1");
  momentum.validate();
}

std::size_t TrainConfig::total_steps(std::size_t records) const {
  return steps > 0 ? steps : epochs * batches_per_epoch(records);
}

void LossConfig::validate() const {
  temperatures.validate();
  weights.validate();
  ssl::CenterState{Tensor(), center_momentum}.validate();
}

void RunConfig::validate() const {
  model.validate();
  augment.validate();
  train.validate();
  loss.validate();
  if (augment.global.count < 1) throw ConfigError("augment.global.count", "training needs at least one global view");
  if (augment.global.count + augment.local.count < 2)
    throw ConfigError("augment.local.count", "training needs at least two views in total");
  for (const auto* group : {&augment.global, &augment.local}) {
    if (group->count == 0) continue;
    if (std::find(model.view_sizes.begin(), model.view_sizes.end(), group->size) == model.view_sizes.end())
      throw ConfigError("model.view_sizes", "view size " + std::to_string(group->size) + " has no positional table");
  }
}

RunConfig parse_run_config(const nlohmann::json& j) {
  reject_unknown_keys(j, {"manifest", "output_dir", "model", "augment", "train", "loss"}, "");
  RunConfig c;
  read_optional(j, "manifest", c.manifest, "");
  read_optional(j, "output_dir", c.output_dir, "");
  if (j.contains("model")) from_json(j.at("model"), c.model);
  if (j.contains("augment")) from_json(j.at("augment"), c.augment);
  if (j.contains("train")) train_from(j.at("train"), c.train);
  if (j.contains("loss")) loss_from(j.at("loss"), c.loss);
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(ss.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config", path.string() + ": " + e.what());
  }
  return parse_run_config(j);
}

nlohmann::json run_config_to_json(const RunConfig& c) {
  return {{"manifest", c.manifest},
          {"output_dir", c.output_dir},
          {"model", c.model},
          {"augment", c.augment},
          {"train", train_to(c.train)},
          {"loss", loss_to(c.loss)}};
}

}  // namespace gssl::engine
