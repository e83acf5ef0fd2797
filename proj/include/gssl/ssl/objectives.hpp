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

#include <span>

#include <nlohmann/json.hpp>

#include "gssl/numerics/autograd.hpp"
#include "gssl/numerics/tensor.hpp"

namespace gssl::ssl {

/// Student temperature and the teacher temperature warmup.
struct Temperatures {
  double student = 0.1;
  double teacher_start = 0.04;
  double teacher_end = 0.07;
  double teacher_warmup_frac = 0.1;

  /// Teacher must stay sharper than the student at every point of the warmup.
  void validate() const;
  double teacher_at(std::size_t step, std::size_t total) const;
};

struct CenterState {
  Tensor c;  // [K]
  double momentum = 0.9;

  static CenterState zeros(std::size_t k, double momentum = 0.9);
  void validate() const;
};

struct LossWeights {
  double image = 1.0;
  double patch = 1.0;
  double koleo = 0.1;

  void validate() const;
};

/// softmax((logits - c) / tau_t) per row; a plain tensor, so no gradient path exists.
Tensor teacher_distribution(const Tensor& logits, const Tensor& center, double tau_t);

/// Cross-entropy averaged over (student view i, teacher view j) pairs with
/// i != j. Teacher view j is the same crop as student view j, so the first
/// teacher.size() student views must be the global ones. `raw_sum` returns
/// the unnormalized sum instead. Throws ValidationError when no pair exists.
ag::Var dino_image_loss(std::span<const Tensor> teacher_probs, std::span<const ag::Var> student_log_probs,
                        bool raw_sum = false);

/// Mean over masked rows of -sum_k P_t log P_s at the same patch position.
ag::Var ibot_patch_loss(const Tensor& teacher_probs, const ag::Var& student_log_probs,
                        std::span<const std::size_t> mask);

/// KL(mean row || uniform) = sum_k pbar_k log(pbar_k K).
ag::Var koleo_loss(const ag::Var& probs);

ag::Var total_loss(const LossWeights& w, const ag::Var& image, const ag::Var& patch, const ag::Var& koleo);
double total_loss(const LossWeights& w, double image, double patch, double koleo);

/// c <- m c + (1 - m) mean_rows(logits).
void update_center(CenterState& state, const Tensor& teacher_logits);

void to_json(nlohmann::json& j, const Temperatures& t);
void from_json(const nlohmann::json& j, Temperatures& t);
void to_json(nlohmann::json& j, const LossWeights& w);
void from_json(const nlohmann::json& j, LossWeights& w);

}  // namespace gssl::ssl
