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


#include "gssl/numerics/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <unordered_set>

#include "gssl/errors.hpp"

namespace gssl::ag {
namespace {

std::string& fault_op() {
  static std::string name;
  return name;
}

void accumulate(Node& n, const Tensor& g) {
  if (!n.requires_grad) return;
  if (n.grad.empty()) {
    n.grad = g;
    return;
  }
  auto dst = n.grad.data();
  auto src = g.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

// Accumulates via a callback that writes into a zero-initialized buffer, or
// directly into the existing gradient when one is already present.
template <typename F>
void accumulate_with(Node& n, F&& write) {
  if (!n.requires_grad) return;
  if (n.grad.empty()) n.grad = Tensor::zeros_like(n.value);
  write(n.grad);
}

bool is_scalar(const Tensor& t) { return t.size() == 1; }

void require_matrix(const Tensor& t, const char* op) {
  if (t.rank() != 2) throw DimensionError(std::string(op) + ": expected a matrix, got " + shape_string(t.shape()));
}

double sum_of(const Tensor& t) {
  double s = 0.0;
  for (double v : t.data()) s += v;
  return s;
}

}  // namespace

Var Var::constant(Tensor value) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  return Var(std::move(n));
}

Var Var::parameter(Tensor value) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->requires_grad = true;
  return Var(std::move(n));
}

const Tensor& Var::grad() const {
  if (node_->grad.empty()) throw Error("no gradient accumulated for this value");
  return node_->grad;
}

Var Var::make(Tensor value, const char* op, std::vector<Var> inputs, std::function<void(Node&)> backward) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->op = op;
  for (const auto& in : inputs) n->requires_grad = n->requires_grad || in.requires_grad();
  if (n->requires_grad) {
    n->parents.reserve(inputs.size());
    for (auto& in : inputs) n->parents.push_back(in.node_);
    n->backward = std::move(backward);
  }
  return Var(std::move(n));
}

void set_gradient_fault(std::string op_name) { fault_op() = std::move(op_name); }

void backward(const Var& loss) {
  if (loss.value().size() != 1)
    throw DimensionError("backward: loss must be a scalar, got " + shape_string(loss.shape()));
  auto root = loss.node();
  if (!root->requires_grad) return;

  // Iterative post-order DFS gives a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack{{root.get(), 0}};
  visited.insert(root.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* p = node->parents[next++].get();
      if (p->requires_grad && visited.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  accumulate(*root, Tensor(root->value.shape(), 1.0));
  const std::string& fault = fault_op();
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node& n = **it;
    if (!n.backward || n.grad.empty()) continue;
    if (!fault.empty() && fault == n.op)
      for (double& g : n.grad.data()) g *= 1.5;
    n.backward(n);
  }
}

// --- arithmetic -------------------------------------------------------------

namespace {

enum class Bcast { none, left, right };

Bcast broadcast_kind(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() == b.shape()) return Bcast::none;
  if (is_scalar(a)) return Bcast::left;
  if (is_scalar(b)) return Bcast::right;
  throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                       shape_string(b.shape()));
}

template <typename F>
Tensor binary_map(const Tensor& a, const Tensor& b, Bcast k, F f) {
  Tensor out(k == Bcast::left ? b.shape() : a.shape());
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) {
    const double x = k == Bcast::left ? a[0] : a[i];
    const double y = k == Bcast::right ? b[0] : b[i];
    o[i] = f(x, y);
  }
  return out;
}

// Reduces an elementwise gradient onto an operand that may have been broadcast.
void accumulate_operand(Node& operand, const Tensor& g, bool was_broadcast) {
  if (!operand.requires_grad) return;
  if (was_broadcast) {
    Tensor s(operand.value.shape(), sum_of(g));
    accumulate(operand, s);
  } else {
    accumulate(operand, g);
  }
}

}  // namespace

Var add(const Var& a, const Var& b) {
  const auto k = broadcast_kind(a.value(), b.value(), "add");
  return Var::make(binary_map(a.value(), b.value(), k, [](double x, double y) { return x + y; }), "add", {a, b},
                   [k](Node& self) {
                     accumulate_operand(*self.parents[0], self.grad, k == Bcast::left);
                     accumulate_operand(*self.parents[1], self.grad, k == Bcast::right);
                   });
}

Var sub(const Var& a, const Var& b) {
  const auto k = broadcast_kind(a.value(), b.value(), "sub");
  return Var::make(binary_map(a.value(), b.value(), k, [](double x, double y) { return x - y; }), "sub", {a, b},
                   [k](Node& self) {
                     accumulate_operand(*self.parents[0], self.grad, k == Bcast::left);
                     Tensor neg = self.grad;
                     for (double& v : neg.data()) v = -v;
                     accumulate_operand(*self.parents[1], neg, k == Bcast::right);
                   });
}

Var mul(const Var& a, const Var& b) {
  const auto k = broadcast_kind(a.value(), b.value(), "mul");
  return Var::make(binary_map(a.value(), b.value(), k, [](double x, double y) { return x * y; }), "mul", {a, b},
                   [k](Node& self) {
                     Node& pa = *self.parents[0];
                     Node& pb = *self.parents[1];
                     if (pa.requires_grad) {
                       Tensor ga = binary_map(self.grad, pb.value, k == Bcast::right ? Bcast::right : Bcast::none,
                                              [](double g, double y) { return g * y; });
                       if (k == Bcast::left) {
                         // a was the scalar: d/da = sum(g * b)
                         double s = 0.0;
                         for (std::size_t i = 0; i < self.grad.size(); ++i) s += self.grad[i] * pb.value[i];
                         accumulate(pa, Tensor(pa.value.shape(), s));
                       } else {
                         accumulate(pa, ga);
                       }
                     }
                     if (pb.requires_grad) {
                       if (k == Bcast::right) {
                         double s = 0.0;
                         for (std::size_t i = 0; i < self.grad.size(); ++i) s += self.grad[i] * pa.value[i];
                         accumulate(pb, Tensor(pb.value.shape(), s));
                       } else {
                         accumulate(pb, binary_map(self.grad, pa.value, k == Bcast::left ? Bcast::right : Bcast::none,
                                                   [](double g, double x) { return g * x; }));
                       }
                     }
                   });
}

Var scale(const Var& a, double s) {
  Tensor out = a.value();
  for (double& v : out.data()) v *= s;
  return Var::make(std::move(out), "scale", {a}, [s](Node& self) {
    Tensor g = self.grad;
    for (double& v : g.data()) v *= s;
    accumulate(*self.parents[0], g);
  });
}

Var add_scalar(const Var& a, double s) {
  Tensor out = a.value();
  for (double& v : out.data()) v += s;
  return Var::make(std::move(out), "add_scalar", {a}, [](Node& self) { accumulate(*self.parents[0], self.grad); });
}

Var add_rowwise(const Var& x, const Var& bias) {
  const Tensor& xv = x.value();
  const Tensor& bv = bias.value();
  if (bv.size() != xv.cols())
    throw DimensionError("add_rowwise: bias " + shape_string(bv.shape()) + " vs rows of " + shape_string(xv.shape()));
  Tensor out = xv;
  const std::size_t n = xv.cols();
  for (std::size_t r = 0; r < xv.rows(); ++r)
    for (std::size_t c = 0; c < n; ++c) out.at(r, c) += bv[c];
  return Var::make(std::move(out), "add_rowwise", {x, bias}, [](Node& self) {
    accumulate(*self.parents[0], self.grad);
    accumulate_with(*self.parents[1], [&](Tensor& gb) {
      const std::size_t n = self.grad.cols();
      for (std::size_t r = 0; r < self.grad.rows(); ++r)
        for (std::size_t c = 0; c < n; ++c) gb[c] += self.grad.at(r, c);
    });
  });
}

Var matmul(const Var& a, const Var& b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_matrix(av, "matmul");
  require_matrix(bv, "matmul");
  const std::size_t m = av.shape()[0], k = av.shape()[1], n = bv.shape()[1];
  if (bv.shape()[0] != k)
    throw DimensionError("matmul: inner extents differ " + shape_string(av.shape()) + " x " + shape_string(bv.shape()));
  Tensor out(Shape{m, n});
  kernels::gemm_nn(m, k, n, av.data().data(), bv.data().data(), out.data().data());
  return Var::make(std::move(out), "matmul", {a, b}, [m, k, n](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    // dA = G B^T, dB = A^T G
    accumulate_with(pa, [&](Tensor& ga) {
      kernels::gemm_nt(m, n, k, self.grad.data().data(), pb.value.data().data(), ga.data().data());
    });
    accumulate_with(pb, [&](Tensor& gb) {
      kernels::gemm_tn(k, m, n, pa.value.data().data(), self.grad.data().data(), gb.data().data());
    });
  });
}

static Tensor transposed(const Tensor& t) {
  const std::size_t m = t.shape()[0], n = t.shape()[1];
  Tensor out(Shape{n, m});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out.at(j, i) = t.at(i, j);
  return out;
}

Var transpose(const Var& a) {
  require_matrix(a.value(), "transpose");
  return Var::make(transposed(a.value()), "transpose", {a},
                   [](Node& self) { accumulate(*self.parents[0], transposed(self.grad)); });
}

Var exp(const Var& a) {
  Tensor out = a.value();
  for (double& v : out.data()) v = std::exp(v);
  return Var::make(std::move(out), "exp", {a}, [](Node& self) {
    Tensor g = self.grad;
    for (std::size_t i = 0; i < g.size(); ++i) g[i] *= self.value[i];
    accumulate(*self.parents[0], g);
  });
}

Var log(const Var& a) {
  Tensor out = a.value();
  for (double& v : out.data()) {
    if (!(v > 0.0)) throw ParameterError("log: input must be positive");
    v = std::log(v);
  }
  return Var::make(std::move(out), "log", {a}, [](Node& self) {
    const Tensor& x = self.parents[0]->value;
    Tensor g = self.grad;
    for (std::size_t i = 0; i < g.size(); ++i) g[i] /= x[i];
    accumulate(*self.parents[0], g);
  });
}

Var xlogx(const Var& a) {
  Tensor out = a.value();
  for (double& v : out.data()) {
    if (v < 0.0) throw ParameterError("xlogx: input must be nonnegative");
    v = v > 0.0 ? v * std::log(v) : 0.0;
  }
  return Var::make(std::move(out), "xlogx", {a}, [](Node& self) {
    const Tensor& x = self.parents[0]->value;
    Tensor g = self.grad;
    for (std::size_t i = 0; i < g.size(); ++i)
      g[i] *= std::log(std::max(x[i], std::numeric_limits<double>::min())) + 1.0;
    accumulate(*self.parents[0], g);
  });
}

Var gelu(const Var& a) {
  Tensor out = a.value();
  for (double& v : out.data()) v = 0.5 * v * (1.0 + std::erf(v * std::numbers::sqrt2 / 2.0));
  return Var::make(std::move(out), "gelu", {a}, [](Node& self) {
    const Tensor& x = self.parents[0]->value;
    Tensor g = self.grad;
    constexpr double inv_sqrt_2pi = 0.3989422804014327;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double cdf = 0.5 * (1.0 + std::erf(x[i] * std::numbers::sqrt2 / 2.0));
      const double pdf = inv_sqrt_2pi * std::exp(-0.5 * x[i] * x[i]);
      g[i] *= cdf + x[i] * pdf;
    }
    accumulate(*self.parents[0], g);
  });
}

// --- reductions -------------------------------------------------------------

Var sum(const Var& a) {
  return Var::make(Tensor::scalar(sum_of(a.value())), "sum", {a}, [](Node& self) {
    accumulate(*self.parents[0], Tensor(self.parents[0]->value.shape(), self.grad[0]));
  });
}

Var mean(const Var& a) {
  const double n = static_cast<double>(a.value().size());
  return Var::make(Tensor::scalar(sum_of(a.value()) / n), "mean", {a}, [n](Node& self) {
    accumulate(*self.parents[0], Tensor(self.parents[0]->value.shape(), self.grad[0] / n));
  });
}

Var mean_rows(const Var& a) {
  const Tensor& x = a.value();
  const std::size_t m = x.rows(), n = x.cols();
  Tensor out(Shape{n});
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < n; ++c) out[c] += x.at(r, c);
  for (double& v : out.data()) v /= static_cast<double>(m);
  return Var::make(std::move(out), "mean_rows", {a}, [m, n](Node& self) {
    accumulate_with(*self.parents[0], [&](Tensor& g) {
      for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = 0; c < n; ++c) g.at(r, c) += self.grad[c] / static_cast<double>(m);
    });
  });
}

// --- last-axis ops ----------------------------------------------------------

static Tensor softmax_values(const Tensor& x, double tau) {
  Tensor out(x.shape());
  const std::size_t n = x.cols();
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto xr = x.row(r);
    auto o = out.row(r);
    const double mx = *std::max_element(xr.begin(), xr.end());
    double z = 0.0;
    for (std::size_t c = 0; c < n; ++c) z += (o[c] = std::exp((xr[c] - mx) / tau));
    for (std::size_t c = 0; c < n; ++c) o[c] /= z;
  }
  return out;
}

Var softmax(const Var& x, double tau) {
  if (!(tau > 0.0)) throw ParameterError("softmax: temperature must be positive");
  return Var::make(softmax_values(x.value(), tau), "softmax", {x}, [tau](Node& self) {
    const Tensor& y = self.value;
    const std::size_t n = y.cols();
    Tensor g(y.shape());
    for (std::size_t r = 0; r < y.rows(); ++r) {
      double dot = 0.0;
      for (std::size_t c = 0; c < n; ++c) dot += self.grad.at(r, c) * y.at(r, c);
      for (std::size_t c = 0; c < n; ++c) g.at(r, c) = y.at(r, c) * (self.grad.at(r, c) - dot) / tau;
    }
    accumulate(*self.parents[0], g);
  });
}

Var log_softmax(const Var& x, double tau) {
  if (!(tau > 0.0)) throw ParameterError("log_softmax: temperature must be positive");
  const Tensor& xv = x.value();
  Tensor out(xv.shape());
  const std::size_t n = xv.cols();
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    auto xr = xv.row(r);
    auto o = out.row(r);
    const double mx = *std::max_element(xr.begin(), xr.end());
    double z = 0.0;
    for (std::size_t c = 0; c < n; ++c) z += std::exp((xr[c] - mx) / tau);
    const double lse = std::log(z);
    for (std::size_t c = 0; c < n; ++c) o[c] = (xr[c] - mx) / tau - lse;
  }
  return Var::make(std::move(out), "log_softmax", {x}, [tau](Node& self) {
    const Tensor& y = self.value;
    const std::size_t n = y.cols();
    Tensor g(y.shape());
    for (std::size_t r = 0; r < y.rows(); ++r) {
      double gs = 0.0;
      for (std::size_t c = 0; c < n; ++c) gs += self.grad.at(r, c);
      for (std::size_t c = 0; c < n; ++c) g.at(r, c) = (self.grad.at(r, c) - std::exp(y.at(r, c)) * gs) / tau;
    }
    accumulate(*self.parents[0], g);
  });
}

Var layer_norm(const Var& x, const Var& gamma, const Var& beta, double eps) {
  const Tensor& xv = x.value();
  const std::size_t m = xv.rows(), n = xv.cols();
  if (gamma.value().size() != n || beta.value().size() != n)
    throw DimensionError("layer_norm: affine parameters must have " + std::to_string(n) + " entries");
  Tensor xhat(xv.shape());
  std::vector<double> rstd(m);
  Tensor out(xv.shape());
  const Tensor& gv = gamma.value();
  const Tensor& bv = beta.value();
  for (std::size_t r = 0; r < m; ++r) {
    auto xr = xv.row(r);
    double mu = 0.0;
    for (double v : xr) mu += v;
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (double v : xr) var += (v - mu) * (v - mu);
    var /= static_cast<double>(n);
    rstd[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t c = 0; c < n; ++c) {
      xhat.at(r, c) = (xr[c] - mu) * rstd[r];
      out.at(r, c) = xhat.at(r, c) * gv[c] + bv[c];
    }
  }
  return Var::make(std::move(out), "layer_norm", {x, gamma, beta},
                   [xhat = std::move(xhat), rstd = std::move(rstd), m, n](Node& self) {
                     const Tensor& g = self.grad;
                     const Tensor& gv = self.parents[1]->value;
                     accumulate_with(*self.parents[1], [&](Tensor& dg) {
                       for (std::size_t r = 0; r < m; ++r)
                         for (std::size_t c = 0; c < n; ++c) dg[c] += g.at(r, c) * xhat.at(r, c);
                     });
                     accumulate_with(*self.parents[2], [&](Tensor& db) {
                       for (std::size_t r = 0; r < m; ++r)
                         for (std::size_t c = 0; c < n; ++c) db[c] += g.at(r, c);
                     });
                     accumulate_with(*self.parents[0], [&](Tensor& dx) {
                       std::vector<double> dxhat(n);
                       for (std::size_t r = 0; r < m; ++r) {
                         double mean_d = 0.0, mean_dx = 0.0;
                         for (std::size_t c = 0; c < n; ++c) {
                           dxhat[c] = g.at(r, c) * gv[c];
                           mean_d += dxhat[c];
                           mean_dx += dxhat[c] * xhat.at(r, c);
                         }
                         mean_d /= static_cast<double>(n);
                         mean_dx /= static_cast<double>(n);
                         for (std::size_t c = 0; c < n; ++c)
                           dx.at(r, c) += rstd[r] * (dxhat[c] - mean_d - xhat.at(r, c) * mean_dx);
                       }
                     });
                   });
}

Var l2_normalize(const Var& x, double eps) {
  const Tensor& xv = x.value();
  const std::size_t m = xv.rows(), n = xv.cols();
  Tensor out(xv.shape());
  std::vector<double> norms(m);
  for (std::size_t r = 0; r < m; ++r) {
    double s = 0.0;
    for (double v : xv.row(r)) s += v * v;
    norms[r] = std::max(std::sqrt(s), eps);
    for (std::size_t c = 0; c < n; ++c) out.at(r, c) = xv.at(r, c) / norms[r];
  }
  return Var::make(std::move(out), "l2_normalize", {x}, [norms = std::move(norms), m, n, eps](Node& self) {
    const Tensor& y = self.value;
    Tensor g(y.shape());
    for (std::size_t r = 0; r < m; ++r) {
      if (norms[r] <= eps) {
        for (std::size_t c = 0; c < n; ++c) g.at(r, c) = self.grad.at(r, c) / eps;
        continue;
      }
      double dot = 0.0;
      for (std::size_t c = 0; c < n; ++c) dot += self.grad.at(r, c) * y.at(r, c);
      for (std::size_t c = 0; c < n; ++c) g.at(r, c) = (self.grad.at(r, c) - y.at(r, c) * dot) / norms[r];
    }
    accumulate(*self.parents[0], g);
  });
}

// --- structural -------------------------------------------------------------

Var reshape(const Var& a, Shape shape) {
  Tensor out = a.value().reshaped(std::move(shape));
  return Var::make(std::move(out), "reshape", {a}, [](Node& self) {
    accumulate(*self.parents[0], self.grad.reshaped(self.parents[0]->value.shape()));
  });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("concat_rows: no inputs");
  const std::size_t n = parts[0].value().cols();
  std::size_t m = 0;
  for (const auto& p : parts) {
    if (p.value().cols() != n) throw DimensionError("concat_rows: column counts differ");
    m += p.value().rows();
  }
  std::vector<double> data;
  data.reserve(m * n);
  for (const auto& p : parts) data.insert(data.end(), p.value().data().begin(), p.value().data().end());
  return Var::make(Tensor(Shape{m, n}, std::move(data)), "concat_rows", {parts.begin(), parts.end()},
                   [](Node& self) {
                     std::size_t offset = 0;
                     for (auto& p : self.parents) {
                       const std::size_t len = p->value.size();
                       if (p->requires_grad) {
                         std::vector<double> g(self.grad.data().begin() + offset,
                                               self.grad.data().begin() + offset + len);
                         accumulate(*p, Tensor(p->value.shape(), std::move(g)));
                       }
                       offset += len;
                     }
                   });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no inputs");
  const std::size_t m = parts[0].value().rows();
  std::size_t n = 0;
  for (const auto& p : parts) {
    require_matrix(p.value(), "concat_cols");
    if (p.value().rows() != m) throw DimensionError("concat_cols: row counts differ");
    n += p.value().cols();
  }
  Tensor out(Shape{m, n});
  std::size_t c0 = 0;
  for (const auto& p : parts) {
    const Tensor& v = p.value();
    for (std::size_t r = 0; r < m; ++r)
      for (std::size_t c = 0; c < v.cols(); ++c) out.at(r, c0 + c) = v.at(r, c);
    c0 += v.cols();
  }
  return Var::make(std::move(out), "concat_cols", {parts.begin(), parts.end()}, [m](Node& self) {
    std::size_t c0 = 0;
    for (auto& p : self.parents) {
      const std::size_t w = p->value.cols();
      accumulate_with(*p, [&](Tensor& g) {
        for (std::size_t r = 0; r < m; ++r)
          for (std::size_t c = 0; c < w; ++c) g.at(r, c) += self.grad.at(r, c0 + c);
      });
      c0 += w;
    }
  });
}

Var slice_rows(const Var& a, std::size_t begin, std::size_t end) {
  const Tensor& v = a.value();
  require_matrix(v, "slice_rows");
  if (begin >= end || end > v.rows()) throw DimensionError("slice_rows: bad range");
  const std::size_t n = v.cols();
  std::vector<double> data(v.data().begin() + begin * n, v.data().begin() + end * n);
  return Var::make(Tensor(Shape{end - begin, n}, std::move(data)), "slice_rows", {a}, [begin, n](Node& self) {
    accumulate_with(*self.parents[0], [&](Tensor& g) {
      auto src = self.grad.data();
      for (std::size_t i = 0; i < src.size(); ++i) g[begin * n + i] += src[i];
    });
  });
}

Var slice_cols(const Var& a, std::size_t begin, std::size_t end) {
  const Tensor& v = a.value();
  require_matrix(v, "slice_cols");
  if (begin >= end || end > v.cols()) throw DimensionError("slice_cols: bad range");
  const std::size_t m = v.rows(), w = end - begin;
  Tensor out(Shape{m, w});
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < w; ++c) out.at(r, c) = v.at(r, begin + c);
  return Var::make(std::move(out), "slice_cols", {a}, [begin, m, w](Node& self) {
    accumulate_with(*self.parents[0], [&](Tensor& g) {
      for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = 0; c < w; ++c) g.at(r, begin + c) += self.grad.at(r, c);
    });
  });
}

Var gather_rows(const Var& a, std::span<const std::size_t> index) {
  const Tensor& v = a.value();
  const std::size_t n = v.cols();
  if (index.empty()) throw DimensionError("gather_rows: empty index set");
  Tensor out(Shape{index.size(), n});
  for (std::size_t r = 0; r < index.size(); ++r) {
    if (index[r] >= v.rows()) throw DimensionError("gather_rows: index out of range");
    std::copy_n(v.row(index[r]).begin(), n, out.row(r).begin());
  }
  std::vector<std::size_t> idx(index.begin(), index.end());
  return Var::make(std::move(out), "gather_rows", {a}, [idx = std::move(idx), n](Node& self) {
    accumulate_with(*self.parents[0], [&](Tensor& g) {
      for (std::size_t r = 0; r < idx.size(); ++r)
        for (std::size_t c = 0; c < n; ++c) g.at(idx[r], c) += self.grad.at(r, c);
    });
  });
}

Var scatter_rows(const Var& base, std::span<const std::size_t> index, const Var& updates) {
  const Tensor& bv = base.value();
  const Tensor& uv = updates.value();
  const std::size_t n = bv.cols();
  if (uv.cols() != n || uv.rows() != index.size())
    throw DimensionError("scatter_rows: updates must be " + std::to_string(index.size()) + "x" + std::to_string(n));
  std::vector<std::size_t> idx(index.begin(), index.end());
  {
    std::vector<std::size_t> sorted = idx;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw DimensionError("scatter_rows: duplicate index");
    if (!sorted.empty() && sorted.back() >= bv.rows()) throw DimensionError("scatter_rows: index out of range");
  }
  Tensor out = bv;
  for (std::size_t r = 0; r < idx.size(); ++r) std::copy_n(uv.row(r).begin(), n, out.row(idx[r]).begin());
  return Var::make(std::move(out), "scatter_rows", {base, updates}, [idx = std::move(idx), n](Node& self) {
    if (self.parents[0]->requires_grad) {
      Tensor gb = self.grad;
      for (auto i : idx) std::fill_n(gb.row(i).begin(), n, 0.0);
      accumulate(*self.parents[0], gb);
    }
    accumulate_with(*self.parents[1], [&](Tensor& gu) {
      for (std::size_t r = 0; r < idx.size(); ++r)
        for (std::size_t c = 0; c < n; ++c) gu.at(r, c) += self.grad.at(idx[r], c);
    });
  });
}

Var repeat_rows(const Var& row, std::size_t count) {
  const Tensor& v = row.value();
  if (v.rows() != 1) throw DimensionError("repeat_rows: expected a single row, got " + shape_string(v.shape()));
  if (count == 0) throw DimensionError("repeat_rows: count must be positive");
  const std::size_t n = v.cols();
  Tensor out(Shape{count, n});
  for (std::size_t r = 0; r < count; ++r) std::copy_n(v.data().begin(), n, out.row(r).begin());
  return Var::make(std::move(out), "repeat_rows", {row}, [count, n](Node& self) {
    accumulate_with(*self.parents[0], [&](Tensor& g) {
      for (std::size_t r = 0; r < count; ++r)
        for (std::size_t c = 0; c < n; ++c) g[c] += self.grad.at(r, c);
    });
  });
}

}  // namespace gssl::ag
