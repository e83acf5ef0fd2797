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


#include "gssl/model/params.hpp"

#include "gssl/errors.hpp"

namespace gssl::model {

void ParamSet::add(std::string name, Tensor value, bool weight_decay) {
  if (index_.count(name)) throw Error("duplicate parameter name " + name);
  index_.emplace(name, names_.size());
  names_.push_back(std::move(name));
  values_.push_back(std::move(value));
  decay_.push_back(weight_decay);
}

std::size_t ParamSet::index(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw Error("unknown parameter " + name);
  return it->second;
}

std::size_t ParamSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& v : values_) n += v.size();
  return n;
}

bool ParamSet::same_layout(const ParamSet& other) const {
  if (names_ != other.names_) return false;
  for (std::size_t i = 0; i < values_.size(); ++i)
    if (values_[i].shape() != other.values_[i].shape()) return false;
  return true;
}

BoundParams::BoundParams(const ParamSet& params, bool trainable) : params_(&params), trainable_(trainable) {
  vars_.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i)
    vars_.push_back(trainable ? ag::Var::parameter(params.value(i)) : ag::Var::constant(params.value(i)));
}

std::vector<GradCheckResult> check_param_gradients(const ParamSet& params,
                                                   const std::function<ag::Var(const BoundParams&)>& loss,
                                                   double eps, double tolerance) {
  BoundParams bound(params, true);
  ag::backward(loss(bound));

  ParamSet probe = params;
  auto eval = [&] { return loss(BoundParams(probe, false)).value().item(); };
  std::vector<GradCheckResult> out;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Tensor analytic = bound.at(i).has_grad() ? bound.at(i).grad() : Tensor::zeros_like(params.value(i));
    Tensor numeric = Tensor::zeros_like(params.value(i));
    auto values = probe.value(i).data();
    for (std::size_t k = 0; k < values.size(); ++k) {
      const double saved = values[k];
      values[k] = saved + eps;
      const double up = eval();
      values[k] = saved - eps;
      const double down = eval();
      values[k] = saved;
      numeric.data()[k] = (up - down) / (2.0 * eps);
    }
    const double err = relative_error(analytic, numeric);
    out.push_back({params.name(i), err, err <= tolerance});
  }
  return out;
}

}  // namespace gssl::model
