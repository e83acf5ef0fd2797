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
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "gssl/numerics/tensor.hpp"

/// Reverse-mode differentiation over whole-tensor operations.
///
/// A `Var` is a handle to a graph node. Leaves are either trainable
/// parameters or constants; an operation result requires a gradient iff any
/// input does, and only such results keep a link to their inputs. Constants
/// therefore never receive a gradient, which is how the EMA teacher is kept
/// out of backpropagation.
namespace gssl::ag {

struct Node {
  Tensor value;
  Tensor grad;  // empty until something flows into this node
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node& self)> backward;
};

class Var {
 public:
  Var() = default;

  static Var constant(Tensor value);
  static Var parameter(Tensor value);

  const Tensor& value() const { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  bool requires_grad() const { return node_->requires_grad; }
  bool has_grad() const { return !node_->grad.empty(); }
  /// Accumulated gradient; throws if none has been accumulated.
  const Tensor& grad() const;
  void zero_grad() { node_->grad = Tensor(); }
  const char* op() const { return node_->op; }
  explicit operator bool() const { return static_cast<bool>(node_); }

  /// Internal: wraps an operation result.
  static Var make(Tensor value, const char* op, std::vector<Var> inputs, std::function<void(Node&)> backward);
  std::shared_ptr<Node> node() const { return node_; }

 private:
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}
  std::shared_ptr<Node> node_;
};

/// Accumulates d(loss)/d(x) into every trainable ancestor of `loss`.
/// Throws DimensionError if `loss` is not a single value.
void backward(const Var& loss);

/// Test hook: when set, the named op reports a gradient scaled by 1.5.
/// An empty name disables the fault.
void set_gradient_fault(std::string op_name);

// --- arithmetic -------------------------------------------------------------
// Elementwise binary ops require equal shapes, except that either operand may
// be a single-element tensor, which is broadcast. No other broadcasting.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double s);
Var add_scalar(const Var& a, double s);
/// x[m x n] + bias[n] on every row.
Var add_rowwise(const Var& x, const Var& bias);

Var matmul(const Var& a, const Var& b);
Var transpose(const Var& a);

Var exp(const Var& a);
/// Natural log; inputs must be positive.
Var log(const Var& a);
/// x log x with the 0 log 0 = 0 limit; inputs must be nonnegative.
Var xlogx(const Var& a);
/// Exact (erf-based) GELU.
Var gelu(const Var& a);

// --- reductions -------------------------------------------------------------
Var sum(const Var& a);
Var mean(const Var& a);
/// Column means of a matrix: [m x n] -> [n].
Var mean_rows(const Var& a);

// --- last-axis ops ----------------------------------------------------------
/// softmax(x / tau) over the last axis, with max subtraction.
Var softmax(const Var& x, double tau = 1.0);
/// log softmax(x / tau) over the last axis via log-sum-exp.
Var log_softmax(const Var& x, double tau = 1.0);
Var layer_norm(const Var& x, const Var& gamma, const Var& beta, double eps = 1e-6);
/// x / max(||x||, eps) per row.
Var l2_normalize(const Var& x, double eps = 1e-12);

// --- structural -------------------------------------------------------------
Var reshape(const Var& a, Shape shape);
Var concat_rows(std::span<const Var> parts);
Var concat_cols(std::span<const Var> parts);
Var slice_rows(const Var& a, std::size_t begin, std::size_t end);
Var slice_cols(const Var& a, std::size_t begin, std::size_t end);
Var gather_rows(const Var& a, std::span<const std::size_t> index);
/// Copy of `base` with row index[r] replaced by updates row r. Indices must be distinct.
Var scatter_rows(const Var& base, std::span<const std::size_t> index, const Var& updates);
/// Stacks `count` copies of a single row ([n] or [1 x n]) into [count x n].
Var repeat_rows(const Var& row, std::size_t count);

}  // namespace gssl::ag
