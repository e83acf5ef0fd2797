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
#include <vector>

#include "gssl/model/params.hpp"
#include "gssl/numerics/tensor.hpp"

namespace gssl::engine {

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.04;

  void validate() const;
};

struct OptimizerState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::size_t t = 0;

  static OptimizerState zeros_for(const model::ParamSet& params);
};

/// Decoupled decay (params -= lr wd params, for parameters flagged to decay)
/// followed by the bias-corrected Adam step. Throws TrainingError naming the
/// first parameter whose gradient is not finite; nothing is modified then.
void adamw_step(OptimizerState& state, const AdamWConfig& cfg, model::ParamSet& params,
                std::span<const Tensor> grads, double lr, std::size_t step = 0);

/// Rescales all gradients so their joint L2 norm is at most max_norm; returns
/// the norm before clipping. max_norm <= 0 disables clipping. A non-finite norm
/// leaves the gradients untouched.
double clip_grad_norm(std::span<Tensor> grads, double max_norm);

/// teacher <- lambda teacher + (1 - lambda) student, elementwise.
void ema_update(Tensor& teacher, const Tensor& student, double lambda);
void ema_update(model::ParamSet& teacher, const model::ParamSet& student, double lambda);

}  // namespace gssl::engine
