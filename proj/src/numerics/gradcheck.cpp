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


#include "gssl/numerics/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "gssl/errors.hpp"
#include "gssl/numerics/rng.hpp"

namespace gssl {

Tensor finite_difference_gradient(const std::function<double(const Tensor&)>& f, const Tensor& x, double eps) {
  if (!(eps > 0.0)) throw ParameterError("finite_difference_gradient: eps must be positive");
  Tensor grad = Tensor::zeros_like(x);
  Tensor probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + eps;
    const double up = f(probe);
    probe[i] = x[i] - eps;
    const double down = f(probe);
    probe[i] = x[i];
    grad[i] = (up - down) / (2.0 * eps);
  }
  return grad;
}

double relative_error(const Tensor& analytic, const Tensor& numeric) {
  require_same_shape(analytic, numeric, "relative_error");
  double diff = 0.0, scale = 1e-8;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff = std::max(diff, std::abs(analytic[i] - numeric[i]));
    scale = std::max({scale, std::abs(analytic[i]), std::abs(numeric[i])});
  }
  return diff / scale;
}

GradCheckResult check_gradient(const std::string& name, const std::function<ag::Var(const ag::Var&)>& build,
                               const Tensor& x, double eps, double tolerance) {
  auto param = ag::Var::parameter(x);
  auto loss = build(param);
  ag::backward(loss);
  const Tensor analytic = param.has_grad() ? param.grad() : Tensor::zeros_like(x);
  const Tensor numeric = finite_difference_gradient(
      [&](const Tensor& t) { return build(ag::Var::constant(t)).value().item(); }, x, eps);
  GradCheckResult r;
  r.name = name;
  r.max_rel_error = relative_error(analytic, numeric);
  r.passed = r.max_rel_error <= tolerance;
  return r;
}

Tensor random_normal(Shape shape, std::uint64_t seed, double scale) {
  Rng rng(seed);
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = scale * rng.normal();
  return t;
}

Tensor random_uniform(Shape shape, std::uint64_t seed, double lo, double hi) {
  Rng rng(seed);
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

}  // namespace gssl
