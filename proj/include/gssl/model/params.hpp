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

#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "gssl/numerics/autograd.hpp"
#include "gssl/numerics/gradcheck.hpp"
#include "gssl/numerics/tensor.hpp"

namespace gssl::model {

/// Named, ordered parameter tensors. Order is the registration order and is
/// what optimizers, EMA and checkpoints iterate over.
class ParamSet {
 public:
  void add(std::string name, Tensor value, bool weight_decay);

  std::size_t size() const noexcept { return values_.size(); }
  const std::string& name(std::size_t i) const { return names_[i]; }
  bool decays(std::size_t i) const { return decay_[i]; }
  Tensor& value(std::size_t i) { return values_[i]; }
  const Tensor& value(std::size_t i) const { return values_[i]; }
  std::size_t index(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  const Tensor& get(const std::string& name) const { return values_[index(name)]; }
  std::size_t scalar_count() const;

  /// Same names, shapes and order.
  bool same_layout(const ParamSet& other) const;

  bool operator==(const ParamSet& other) const { return names_ == other.names_ && values_ == other.values_; }

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> values_;
  std::vector<bool> decay_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Graph leaves for one forward pass over a ParamSet.
class BoundParams {
 public:
  /// Trainable leaves accumulate gradients; otherwise every leaf is a constant.
  BoundParams(const ParamSet& params, bool trainable);

  const ag::Var& operator[](const std::string& name) const { return vars_[params_->index(name)]; }
  const ag::Var& at(std::size_t i) const { return vars_[i]; }
  std::size_t size() const noexcept { return vars_.size(); }
  bool trainable() const noexcept { return trainable_; }

 private:
  const ParamSet* params_;
  std::vector<ag::Var> vars_;
  bool trainable_;
};

/// Compares backprop gradients of `loss` w.r.t. every parameter tensor with
/// central differences; one result per tensor, named after it.
std::vector<GradCheckResult> check_param_gradients(const ParamSet& params,
                                                   const std::function<ag::Var(const BoundParams&)>& loss,
                                                   double eps = 1e-5, double tolerance = 1e-4);

}  // namespace gssl::model
