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
#include <functional>
#include <string>
#include <vector>

#include "gssl/model/vit.hpp"
#include "gssl/numerics/gradcheck.hpp"

namespace gssl::verify {

/// One differentiable op reduced to a scalar; `build` receives the input and a seed.
struct OpCase {
  std::string name;
  Shape shape;
  bool positive;  // draw inputs from [0.2, 2) instead of N(0, 1)
  std::function<ag::Var(const ag::Var&, std::uint64_t)> build;
};

const std::vector<OpCase>& op_cases();

/// d=16, depth=2, heads=2, p=4, K=8 with 16x16 and 8x8 views.
model::ViTConfig tiny_vit_config();

struct SuiteOptions {
  std::size_t seeds = 20;
  std::uint64_t base_seed = 0;
  bool ops = true;
  bool backbone = true;
  bool losses = true;
  double eps = 1e-5;
  double tolerance = 1e-4;
};

/// One entry per op, per backbone/head parameter tensor ("model:<name>") and
/// per loss ("loss:<name>"), holding the worst error over all seeds.
std::vector<GradCheckResult> run_gradcheck_suite(const SuiteOptions& opts = {});

}  // namespace gssl::verify
