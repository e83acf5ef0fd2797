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


#include "gssl/ssl/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gssl/errors.hpp"
#include "gssl/json_util.hpp"

namespace gssl::ssl {

using json_util::read_optional;
using json_util::reject_unknown_keys;

namespace {

ag::Var cross_entropy(const Tensor& target, const ag::Var& log_probs) {
  require_same_shape(target, log_probs.value(), "cross_entropy");
  return ag::scale(ag::sum(ag::mul(ag::Var::constant(target), log_probs)), -1.0);
}

}  // namespace

void Temperatures::validate() const {
  if (!(student > 0.0)) throw ConfigError("loss.tau_s", "must be positive");
  if (!(teacher_start > 0.0)) throw ConfigError("loss.tau_t_start", "must be positive");
  if (!(teacher_end > 0.0)) throw ConfigError("loss.tau_t_end", "must be positive");
  if (!(teacher_start < student)) throw ConfigError("loss.tau_t_start", "teacher temperature must be below tau_s");
  if (!(teacher_end < student)) throw ConfigError("loss.tau_t_end", "teacher temperature must be below tau_s");
  if (!(teacher_warmup_frac >= 0.0 && teacher_warmup_frac <= 1.0))
    throw ConfigError("loss.tau_t_warmup_frac", "must lie in [0, 1]");
}

double Temperatures::teacher_at(std::size_t step, std::size_t total) const {
  const double warm = teacher_warmup_frac * static_cast<double>(total);
  if (warm <= 0.0 || static_cast<double>(step) >= warm) return teacher_end;
  return teacher_start + (teacher_end - teacher_start) * (static_cast<double>(step) / warm);
}

CenterState CenterState::zeros(std::size_t k, double momentum) { return {Tensor({k}, 0.0), momentum}; }

void CenterState::validate() const {
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("loss.center_momentum", "must lie in [0, 1)");
  if (!c.empty() && !c.all_finite()) throw ValidationError("center contains non-finite values");
}

void LossWeights::validate() const {
  for (double a : {image, patch, koleo})
    if (!(a >= 0.0) || !std::isfinite(a)) throw ConfigError("loss.weights", "weights must be finite and nonnegative");
  if (image + patch + koleo <= 0.0) throw ConfigError("loss.weights", "at least one weight must be positive");
}

Tensor teacher_distribution(const Tensor& logits, const Tensor& center, double tau_t) {
  if (!(tau_t > 0.0)) throw ParameterError("teacher temperature must be positive");
  if (center.size() != logits.cols())
    throw DimensionError("center has " + std::to_string(center.size()) + " entries, logits have " +
                         std::to_string(logits.cols()));
  Tensor shifted = logits;
  const std::size_t k = logits.cols();
  auto d = shifted.data();
  auto c = center.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] -= c[i % k];
  return ag::softmax(ag::Var::constant(std::move(shifted)), tau_t).value();
}

ag::Var dino_image_loss(std::span<const Tensor> teacher_probs, std::span<const ag::Var> student_log_probs,
                        bool raw_sum) {
  if (teacher_probs.empty()) throw ValidationError("image loss needs at least one teacher view");
  if (student_log_probs.size() < 2) throw ValidationError("image loss needs at least two student views");
  if (teacher_probs.size() > student_log_probs.size())
    throw ValidationError("more teacher views than student views");
  std::vector<ag::Var> terms;
  for (std::size_t i = 0; i < student_log_probs.size(); ++i)
    for (std::size_t j = 0; j < teacher_probs.size(); ++j)
      if (i != j) terms.push_back(cross_entropy(teacher_probs[j], student_log_probs[i]));
  if (terms.empty()) throw ValidationError("no (student, teacher) view pair with distinct views");
  ag::Var total = terms.front();
  for (std::size_t t = 1; t < terms.size(); ++t) total = ag::add(total, terms[t]);
  return raw_sum ? total : ag::scale(total, 1.0 / static_cast<double>(terms.size()));
}

ag::Var ibot_patch_loss(const Tensor& teacher_probs, const ag::Var& student_log_probs,
                        std::span<const std::size_t> mask) {
  if (mask.empty()) throw ValidationError("patch loss needs at least one masked patch");
  require_same_shape(teacher_probs, student_log_probs.value(), "ibot_patch_loss");
  ag::Var target = ag::gather_rows(ag::Var::constant(teacher_probs), mask);
  ag::Var picked = ag::gather_rows(student_log_probs, mask);
  return ag::scale(cross_entropy(target.value(), picked), 1.0 / static_cast<double>(mask.size()));
}

ag::Var koleo_loss(const ag::Var& probs) {
  ag::Var rows = probs.value().rank() == 1 ? ag::reshape(probs, {1, probs.value().size()}) : probs;
  ag::Var pbar = ag::mean_rows(rows);
  const double log_k = std::log(static_cast<double>(pbar.value().size()));
  return ag::add(ag::sum(ag::xlogx(pbar)), ag::scale(ag::sum(pbar), log_k));
}

ag::Var total_loss(const LossWeights& w, const ag::Var& image, const ag::Var& patch, const ag::Var& koleo) {
  return ag::add(ag::add(ag::scale(image, w.image), ag::scale(patch, w.patch)), ag::scale(koleo, w.koleo));
}

double total_loss(const LossWeights& w, double image, double patch, double koleo) {
  return w.image * image + w.patch * patch + w.koleo * koleo;
}

void update_center(CenterState& state, const Tensor& teacher_logits) {
  if (teacher_logits.rank() != 2 || teacher_logits.cols() != state.c.size())
    throw DimensionError("center update expects [n x " + std::to_string(state.c.size()) + "] logits, got " +
                         shape_string(teacher_logits.shape()));
  const Tensor mean = ag::mean_rows(ag::Var::constant(teacher_logits)).value();
  auto c = state.c.data();
  auto mu = mean.data();
  for (std::size_t k = 0; k < c.size(); ++k) c[k] = state.momentum * c[k] + (1.0 - state.momentum) * mu[k];
}

void to_json(nlohmann::json& j, const Temperatures& t) {
  j = {{"tau_s", t.student},
       {"tau_t_start", t.teacher_start},
       {"tau_t_end", t.teacher_end},
       {"tau_t_warmup_frac", t.teacher_warmup_frac}};
}

void from_json(const nlohmann::json& j, Temperatures& t) {
  read_optional(j, "tau_s", t.student, "loss");
  read_optional(j, "tau_t_start", t.teacher_start, "loss");
  read_optional(j, "tau_t_end", t.teacher_end, "loss");
  read_optional(j, "tau_t_warmup_frac", t.teacher_warmup_frac, "loss");
}

void to_json(nlohmann::json& j, const LossWeights& w) { j = nlohmann::json::array({w.image, w.patch, w.koleo}); }

void from_json(const nlohmann::json& j, LossWeights& w) {
  if (!j.is_array() || j.size() != 3) throw ConfigError("loss.weights", "expected [image, patch, koleo]");
  for (const auto& v : j)
    if (!v.is_number()) throw ConfigError("loss.weights", "weights must be numbers");
  w = {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace gssl::ssl
