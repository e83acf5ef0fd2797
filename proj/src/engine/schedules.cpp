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


#include "gssl/engine/schedules.hpp"

#include <cmath>
#include <numbers>

#include "gssl/errors.hpp"

namespace gssl::engine {

void MomentumSchedule::validate() const {
  if (!(0.0 <= start && start <= end && end <= 1.0))
    throw ConfigError("train.momentum", "need 0 <= start <= end <= 1");
}

double MomentumSchedule::at(std::size_t step, std::size_t total) const {
  if (total == 0 || step >= total) return end;
  const double phase = std::numbers::pi * static_cast<double>(step) / static_cast<double>(total);
  return end - (end - start) * (1.0 + std::cos(phase)) / 2.0;
}

double momentum_at(std::size_t step, std::size_t total) { return MomentumSchedule{}.at(step, total); }

double lr_at(std::size_t step, std::size_t total, double warmup_frac, double base_lr) {
  if (total == 0) return 0.0;
  const double t = static_cast<double>(std::min(step, total));
  const double warm = warmup_frac * static_cast<double>(total);
  if (t < warm) return base_lr * t / warm;
  const double span = static_cast<double>(total) - warm;
  if (span <= 0.0) return base_lr;
  const double progress = (t - warm) / span;
  return base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

}  // namespace gssl::engine
