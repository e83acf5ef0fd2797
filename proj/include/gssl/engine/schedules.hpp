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

#include <cstddef>

namespace gssl::engine {

struct MomentumSchedule {
  double start = 0.996;
  double end = 1.0;

  void validate() const;
  /// end - (end - start)(1 + cos(pi t / T)) / 2; steps past T clamp to `end`.
  double at(std::size_t step, std::size_t total) const;
};

/// EMA momentum with the default 0.996 -> 1.0 cosine schedule.
double momentum_at(std::size_t step, std::size_t total);

/// Linear warmup from 0 over warmup_frac * total steps, then cosine decay to 0.
double lr_at(std::size_t step, std::size_t total, double warmup_frac, double base_lr);

}  // namespace gssl::engine
