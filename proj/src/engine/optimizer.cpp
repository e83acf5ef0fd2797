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


#include "gssl/engine/optimizer.hpp"

#include <cmath>
#include <string>

#include "gssl/errors.hpp"

namespace gssl::engine {

void AdamWConfig::validate() const {
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("train.beta1", "must lie in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("train.beta2", "must lie in [0, 1)");
  if (!(eps > 0.0)) throw ConfigError("train.adam_eps", "must be positive");
  if (!(weight_decay >= 0.0)) throw ConfigError("train.weight_decay", "must be nonnegative");
}

OptimizerState OptimizerState::zeros_for(const model::ParamSet& params) {
  OptimizerState s;
  for (std::size_t i = 0; i < params.size(); ++i) {
    s.m.push_back(Tensor::zeros_like(params.value(i)));
    s.v.push_back(Tensor::zeros_like(params.value(i)));
  }
  return s;
}

void adamw_step(OptimizerState& state, const AdamWConfig& cfg, model::ParamSet& params,
                std::span<const Tensor> grads, double lr, std::size_t step) {
  if (grads.size() != params.size() || state.m.size() != params.size() || state.v.size() != params.size())
    throw DimensionError("optimizer state, gradients and parameters disagree in count");
  for (std::size_t i = 0; i < params.size(); ++i) {
    require_same_shape(params.value(i), grads[i], "adamw_step");
    if (!grads[i].all_finite()) throw TrainingError(static_cast<long>(step), "non-finite gradient for parameter " + params.name(i));
  }
  state.t += 1;
  const double t = static_cast<double>(state.t);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params.value(i).data();
    auto g = grads[i].data();
    auto m = state.m[i].data();
    auto v = state.v[i].data();
    const double decay = params.decays(i) ? lr * cfg.weight_decay : 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * g[k];
      v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * g[k] * g[k];
      p[k] -= decay * p[k];
      p[k] -= lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + cfg.eps);
    }
  }
}

double clip_grad_norm(std::span<Tensor> grads, double max_norm) {
  double sq = 0.0;
  for (const auto& g : grads)
    for (double v : g.data()) sq += v * v;
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && std::isfinite(norm) && norm > max_norm) {
    const double s = max_norm / norm;
    for (auto& g : grads)
      for (double& v : g.data()) v *= s;
  }
  return norm;
}

void ema_update(Tensor& teacher, const Tensor& student, double lambda) {
  require_same_shape(teacher, student, "ema_update");
  auto t = teacher.data();
  auto s = student.data();
  for (std::size_t k = 0; k < t.size(); ++k) t[k] = lambda * t[k] + (1.0 - lambda) * s[k];
}

void ema_update(model::ParamSet& teacher, const model::ParamSet& student, double lambda) {
  if (!teacher.same_layout(student)) throw DimensionError("teacher and student parameter layouts differ");
  for (std::size_t i = 0; i < teacher.size(); ++i) ema_update(teacher.value(i), student.value(i), lambda);
}

}  // namespace gssl::engine
