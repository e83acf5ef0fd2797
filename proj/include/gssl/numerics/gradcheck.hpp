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

#include "gssl/numerics/autograd.hpp"
#include "gssl/numerics/tensor.hpp"

namespace gssl {

/// Central differences (f(x + eps e_i) - f(x - eps e_i)) / (2 eps) per coordinate.
Tensor finite_difference_gradient(const std::function<double(const Tensor&)>& f, const Tensor& x, double eps);

/// max_i |a_i - n_i| / max(max_i |a_i|, max_i |n_i|, 1e-8).
double relative_error(const Tensor& analytic, const Tensor& numeric);

struct GradCheckResult {
  std::string name;
  double max_rel_error = 0.0;
  bool passed = false;
};

/// Compares reverse-mode and finite-difference gradients of the scalar
/// produced by `build` with respect to its single input `x`.
GradCheckResult check_gradient(const std::string& name, const std::function<ag::Var(const ag::Var&)>& build,
                               const Tensor& x, double eps = 1e-5, double tolerance = 1e-4);

/// Seeded test inputs: standard normal times `scale`, or uniform on [lo, hi).
Tensor random_normal(Shape shape, std::uint64_t seed, double scale = 1.0);
Tensor random_uniform(Shape shape, std::uint64_t seed, double lo, double hi);

}  // namespace gssl
