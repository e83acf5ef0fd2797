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


#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include "gssl/errors.hpp"
#include "gssl/numerics/autograd.hpp"
#include "gssl/numerics/gradcheck.hpp"
#include "gssl/verify/gradcheck_suite.hpp"
#include "test_helpers.hpp"

using namespace gssl;
using ag::Var;

namespace {

Tensor value_of(const Var& v) { return v.value(); }

}  // namespace

TEST(Tensor, RejectsMismatchedShape) {
  EXPECT_THROW(Tensor(Shape{2, 2}, std::vector<double>{1, 2, 3}), DimensionError);
  EXPECT_THROW(Tensor(Shape{0, 2}), DimensionError);
}

TEST(Tensor, CheckedModeRejectsNonFinite) {
  EXPECT_THROW(Tensor::checked(Shape{2}, {1.0, std::nan("")}), ParameterError);
  EXPECT_THROW(Tensor::checked(Shape{1}, {INFINITY}), ParameterError);
  EXPECT_NO_THROW(Tensor::checked(Shape{2}, {1.0, 2.0}));
}

TEST(Matmul, IdentityAndSmallProducts) {
  auto x = test::random_tensor({3, 3}, 7);
  Tensor eye(Shape{3, 3});
  for (int i = 0; i < 3; ++i) eye.at(i, i) = 1.0;
  EXPECT_EQ(value_of(ag::matmul(Var::constant(eye), Var::constant(x))), x);

  auto a = Tensor::matrix({{1, 2}, {3, 4}});
  auto i2 = Tensor::matrix({{1, 0}, {0, 1}});
  EXPECT_EQ(value_of(ag::matmul(Var::constant(a), Var::constant(i2))), a);

  auto row = Tensor::matrix({{1, 2}});
  auto col = Tensor::matrix({{3}, {4}});
  EXPECT_EQ(value_of(ag::matmul(Var::constant(row), Var::constant(col))).item(), 11.0);
}

TEST(Matmul, ShapeMismatchIsDimensionError) {
  auto a = Var::constant(Tensor(Shape{2, 3}));
  auto b = Var::constant(Tensor(Shape{2, 3}));
  EXPECT_THROW(ag::matmul(a, b), DimensionError);
}

TEST(Softmax, AnalyticValues) {
  auto s = value_of(ag::softmax(Var::constant(Tensor::vector({0, 0})), 1.0));
  EXPECT_DOUBLE_EQ(s[0], 0.5);
  EXPECT_DOUBLE_EQ(s[1], 0.5);

  s = value_of(ag::softmax(Var::constant(Tensor::vector({std::numbers::ln2, 0})), 1.0));
  EXPECT_NEAR(s[0], 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(s[1], 1.0 / 3.0, 1e-15);

  s = value_of(ag::softmax(Var::constant(Tensor::vector({1, 0})), 0.04));
  EXPECT_NEAR(s[0], 1.0 / (1.0 + std::exp(-25.0)), 1e-16);
  EXPECT_NEAR(1.0 - s[0], 1.3887943864771144e-11, 1e-15);
}

TEST(Softmax, RejectsNonPositiveTemperature) {
  auto x = Var::constant(Tensor::vector({1, 2}));
  EXPECT_THROW(ag::softmax(x, 0.0), ParameterError);
  EXPECT_THROW(ag::softmax(x, -1.0), ParameterError);
  EXPECT_THROW(ag::log_softmax(x, 0.0), ParameterError);
}

TEST(Softmax, RowsAreProbabilityVectors) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto x = test::random_tensor({5, 17}, seed, 30.0);
    auto p = value_of(ag::softmax(Var::constant(x), 0.04));
    for (std::size_t r = 0; r < p.rows(); ++r) {
      double s = 0.0;
      for (double v : p.row(r)) {
        EXPECT_GE(v, 0.0);
        s += v;
      }
      EXPECT_NEAR(s, 1.0, 1e-12);
    }
  }
}

TEST(Backward, AnalyticCases) {
  auto x = Var::parameter(Tensor::scalar(3.0));
  ag::backward(ag::mul(x, x));
  EXPECT_DOUBLE_EQ(x.grad().item(), 6.0);

  auto a = Var::parameter(Tensor::scalar(1.5));
  auto b = Var::parameter(Tensor::scalar(-2.0));
  ag::backward(ag::add(a, b));
  EXPECT_DOUBLE_EQ(a.grad().item(), 1.0);
  EXPECT_DOUBLE_EQ(b.grad().item(), 1.0);
}

TEST(Backward, NonScalarLossIsError) {
  auto x = Var::parameter(Tensor::vector({1, 2}));
  EXPECT_THROW(ag::backward(x), DimensionError);
}

TEST(Backward, ConstantsNeverReceiveGradient) {
  auto w = Var::parameter(test::random_tensor({3, 3}, 1));
  auto frozen = Var::constant(test::random_tensor({3, 3}, 2));
  auto loss = ag::sum(ag::matmul(w, frozen));
  ag::backward(loss);
  EXPECT_TRUE(w.has_grad());
  EXPECT_FALSE(frozen.has_grad());
  EXPECT_FALSE(frozen.requires_grad());
}

TEST(Backward, CompositeMatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto w = test::random_tensor({4, 6}, 100 + seed, 0.5);
    const auto target = ag::softmax(Var::constant(test::random_tensor({3, 6}, 200 + seed)), 1.0).value();
    auto x = test::random_tensor({3, 4}, seed);
    auto r = check_gradient(
        "composite",
        [&](const Var& v) {
          auto logp = ag::log(ag::softmax(ag::matmul(v, Var::constant(w)), 0.5));
          return ag::scale(ag::sum(ag::mul(Var::constant(target), logp)), -1.0);
        },
        x);
    EXPECT_LE(r.max_rel_error, 1e-5) << "seed " << seed;
  }
}

TEST(FiniteDifference, AnalyticCases) {
  auto sq = [](const Tensor& t) { return t[0] * t[0]; };
  EXPECT_NEAR(finite_difference_gradient(sq, Tensor::vector({3.0}), 1e-5)[0], 6.0, 1e-9);

  auto constant = [](const Tensor&) { return 4.2; };
  auto g = finite_difference_gradient(constant, Tensor::vector({1, 2, 3}), 1e-5);
  for (double v : g.data()) EXPECT_EQ(v, 0.0);

  auto cubes = [](const Tensor& t) { return t[0] * t[0] * t[0] + t[1] * t[1] * t[1]; };
  g = finite_difference_gradient(cubes, Tensor::vector({1, 2}), 1e-5);
  EXPECT_NEAR(g[0], 3.0, 1e-6);
  EXPECT_NEAR(g[1], 12.0, 1e-6);

  EXPECT_THROW(finite_difference_gradient(sq, Tensor::vector({1}), 0.0), ParameterError);
}

TEST(FiniteDifference, FaultInjectionIsDetected) {
  ag::set_gradient_fault("gelu");
  auto r = check_gradient("gelu", [](const Var& v) { return ag::sum(ag::gelu(v)); }, test::random_tensor({3, 3}, 4));
  ag::set_gradient_fault("");
  EXPECT_FALSE(r.passed);
  EXPECT_GT(r.max_rel_error, 0.1);
}

// Elementwise and structural ops: forward examples.
TEST(Elementwise, ForwardExamples) {
  auto a = Var::constant(Tensor::vector({1, 2, 3}));
  auto b = Var::constant(Tensor::vector({4, 5, 6}));
  EXPECT_EQ(value_of(ag::add(a, b)), Tensor::vector({5, 7, 9}));
  EXPECT_EQ(value_of(ag::mul(a, b)), Tensor::vector({4, 10, 18}));
  EXPECT_EQ(value_of(ag::sub(b, a)), Tensor::vector({3, 3, 3}));
  EXPECT_EQ(value_of(ag::scale(a, 2.0)), Tensor::vector({2, 4, 6}));
  // scalar broadcast is the only broadcast
  EXPECT_EQ(value_of(ag::mul(Var::constant(Tensor::scalar(2)), a)), Tensor::vector({2, 4, 6}));
  EXPECT_THROW(ag::add(a, Var::constant(Tensor::vector({1, 2}))), DimensionError);
  EXPECT_EQ(value_of(ag::add(a, Var::constant(Tensor::scalar(0)))), a.value());
}

TEST(Elementwise, LogExpGelu) {
  auto x = Var::constant(Tensor::vector({0, 1, -1}));
  auto e = value_of(ag::exp(x));
  EXPECT_DOUBLE_EQ(e[0], 1.0);
  EXPECT_DOUBLE_EQ(e[1], std::exp(1.0));
  EXPECT_DOUBLE_EQ(value_of(ag::log(ag::exp(x)))[2], -1.0);
  EXPECT_THROW(ag::log(x), ParameterError);

  auto g = value_of(ag::gelu(x));
  EXPECT_EQ(g[0], 0.0);
  EXPECT_NEAR(g[1], 0.8413447460685429, 1e-15);
  EXPECT_NEAR(g[2], -0.15865525393145707, 1e-15);

  auto xl = value_of(ag::xlogx(Var::constant(Tensor::vector({0, 1, 0.5}))));
  EXPECT_EQ(xl[0], 0.0);
  EXPECT_EQ(xl[1], 0.0);
  EXPECT_DOUBLE_EQ(xl[2], 0.5 * std::log(0.5));
}

TEST(Reductions, SumMeanMeanRows) {
  auto m = Var::constant(Tensor::matrix({{1, 2}, {3, 4}}));
  EXPECT_EQ(value_of(ag::sum(m)).item(), 10.0);
  EXPECT_EQ(value_of(ag::mean(m)).item(), 2.5);
  EXPECT_EQ(value_of(ag::mean_rows(m)), Tensor::vector({2, 3}));
  EXPECT_EQ(value_of(ag::sum(Var::constant(Tensor::scalar(-1)))).item(), -1.0);
}

TEST(LastAxis, LayerNormAndL2) {
  auto x = Var::constant(Tensor::matrix({{1, 2, 3}, {5, 5, 5}}));
  auto ln = value_of(ag::layer_norm(x, Var::constant(Tensor(Shape{3}, 1.0)), Var::constant(Tensor(Shape{3})), 0.0));
  EXPECT_NEAR(ln.at(0, 0), -std::sqrt(1.5), 1e-12);
  EXPECT_NEAR(ln.at(0, 1), 0.0, 1e-12);
  EXPECT_TRUE(std::isnan(ln.at(1, 0)));  // zero variance with eps = 0

  auto ln_eps = value_of(ag::layer_norm(x, Var::constant(Tensor(Shape{3}, 2.0)), Var::constant(Tensor(Shape{3}, 1.0))));
  EXPECT_NEAR(ln_eps.at(1, 2), 1.0, 1e-12);

  auto n = value_of(ag::l2_normalize(Var::constant(Tensor::matrix({{3, 4}, {0, 0}}))));
  EXPECT_DOUBLE_EQ(n.at(0, 0), 0.6);
  EXPECT_DOUBLE_EQ(n.at(0, 1), 0.8);
  EXPECT_EQ(n.at(1, 0), 0.0);
}

TEST(Structural, ConcatSliceGatherScatter) {
  auto a = Var::constant(Tensor::matrix({{1, 2}, {3, 4}}));
  auto b = Var::constant(Tensor::matrix({{5, 6}}));
  std::vector<Var> parts{a, b};
  EXPECT_EQ(value_of(ag::concat_rows(parts)), Tensor::matrix({{1, 2}, {3, 4}, {5, 6}}));
  std::vector<Var> cols{a, a};
  EXPECT_EQ(value_of(ag::concat_cols(cols)), Tensor::matrix({{1, 2, 1, 2}, {3, 4, 3, 4}}));
  EXPECT_EQ(value_of(ag::slice_cols(a, 1, 2)), Tensor::matrix({{2}, {4}}));
  EXPECT_EQ(value_of(ag::slice_rows(a, 1, 2)), Tensor::matrix({{3, 4}}));

  std::vector<std::size_t> idx{1, 1, 0};
  EXPECT_EQ(value_of(ag::gather_rows(a, idx)), Tensor::matrix({{3, 4}, {3, 4}, {1, 2}}));

  std::vector<std::size_t> one{0};
  EXPECT_EQ(value_of(ag::scatter_rows(a, one, b)), Tensor::matrix({{5, 6}, {3, 4}}));
  std::vector<std::size_t> dup{0, 0};
  EXPECT_THROW(ag::scatter_rows(a, dup, ag::repeat_rows(b, 2)), DimensionError);
  EXPECT_EQ(value_of(ag::repeat_rows(b, 3)), Tensor::matrix({{5, 6}, {5, 6}, {5, 6}}));
  EXPECT_THROW(ag::concat_rows(std::vector<Var>{a, Var::constant(Tensor::matrix({{1, 2, 3}}))}), DimensionError);
}

TEST(Determinism, RepeatedEvaluationIsBitwiseIdentical) {
  auto x = test::random_tensor({8, 8}, 3);
  auto build = [&] {
    auto v = Var::parameter(x);
    auto y = ag::sum(ag::gelu(ag::matmul(v, ag::transpose(v))));
    ag::backward(y);
    return std::pair{y.value(), v.grad()};
  };
  EXPECT_EQ(build(), build());
}

// Every differentiable op against central differences, 20 seeds each.
class OpGradient : public ::testing::TestWithParam<verify::OpCase> {};

TEST_P(OpGradient, MatchesFiniteDifferences) {
  const auto& c = GetParam();
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto x = c.positive ? test::random_positive(c.shape, seed) : test::random_tensor(c.shape, seed);
    auto r = check_gradient(c.name, [&](const Var& v) { return c.build(v, seed); }, x);
    EXPECT_TRUE(r.passed) << c.name << " seed " << seed << " rel err " << r.max_rel_error;
  }
}

INSTANTIATE_TEST_SUITE_P(AllOps, OpGradient, ::testing::ValuesIn(verify::op_cases()),
                         [](const auto& info) { return info.param.name; });
