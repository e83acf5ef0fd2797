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


#include "gssl/verify/gradcheck_suite.hpp"

#include <algorithm>
#include <map>

#include "gssl/ssl/objectives.hpp"

namespace gssl::verify {

namespace {

// Projects an op output to a scalar with random weights so that every output
// coordinate contributes to the gradient.
ag::Var weighted_sum(const ag::Var& y, std::uint64_t seed) {
  return ag::sum(ag::mul(y, ag::Var::constant(random_normal(y.shape(), 9000 + seed))));
}

GrayscaleImage random_image(std::size_t side, std::uint64_t seed) {
  Tensor px = random_uniform({side * side}, seed, 0.0, 1.0);
  return GrayscaleImage(side, side, std::vector<double>(px.data().begin(), px.data().end()));
}

Tensor random_probs(Shape shape, std::uint64_t seed) {
  return ag::softmax(ag::Var::constant(random_normal(std::move(shape), seed, 2.0))).value();
}

void merge(std::map<std::string, GradCheckResult>& worst, std::vector<std::string>& order, const GradCheckResult& r) {
  auto it = worst.find(r.name);
  if (it == worst.end()) {
    order.push_back(r.name);
    worst.emplace(r.name, r);
    return;
  }
  it->second.max_rel_error = std::max(it->second.max_rel_error, r.max_rel_error);
  it->second.passed = it->second.passed && r.passed;
}

}  // namespace

const std::vector<OpCase>& op_cases() {
  static const std::vector<OpCase> cases{
    OpCase{"matmul_left", {3, 4}, false,
           [](const ag::Var& v, std::uint64_t s) {
             return weighted_sum(ag::matmul(v, ag::Var::constant(random_normal({4, 5}, s + 50))), s);
           }},
    OpCase{"matmul_right", {4, 5}, false,
           [](const ag::Var& v, std::uint64_t s) {
             return weighted_sum(ag::matmul(ag::Var::constant(random_normal({3, 4}, s + 50)), v), s);
           }},
    OpCase{"transpose", {3, 4}, false, [](const ag::Var& v, std::uint64_t s) { return weighted_sum(ag::transpose(v), s); }},
    OpCase{"add", {2, 3}, false,
           [](const ag::Var& v, std::uint64_t s) { return weighted_sum(ag::add(v, ag::mul(v, v)), s); }},
    OpCase{"sub", {2, 3}, false,
           [](const ag::Var& v, std::uint64_t s) {
             return weighted_sum(ag::sub(ag::Var::constant(random_normal({2, 3}, s)), ag::mul(v, v)), s);
           }},
    OpCase{"mul", {2, 3}, false, [](const ag::Var& v, std::uint64_t s) { return weighted_sum(ag::mul(v, v), s); }},
    OpCase{"mul_scalar_broadcast", {}, false,
           [](const ag::Var& v, std::uint64_t s) {
             return weighted_sum(ag::mul(v, ag::Var::constant(random_normal({2, 3}, s))), s);
           }},
    OpCase{"scale", {5}, false, [](const ag::Var& v, std::uint64_t s) { return weighted_sum(ag::scale(v, -0.7), s); }},
    OpCase{"add_rowwise_bias", {4}, false,
           [](const ag::Var& v, std::uint64_t s) {
             return weighted_sum(ag::add_rowwise(ag::Var::constant(random_normal({3, 4}, s)), v), s);
           }},
    OpCase{"exp", {2, 3}, false, [](const ag::Var& v, std::uint64_t s) { return weighted_sum(ag::exp(v), s); }},
    OpCase{"log", {2, 3}, true, [](const ag::Var& v, std::uint64_t s) { return weighted_sum(ag::log(v), s); }},
    OpCase{"xlogx", {2, 3}, true, [](const ag::Var& v, std::uint64_t s) { return weighted_sum(ag::xlogx(v), s); }},
    OpCase{"gelu", {3, 4}, false, [](const ag::Var& v, std::uint64_t s) { return weighted_sum(ag::gelu(v), s); }},
    OpCase{"sum", {3, 3}, false, [](const ag::Var& v, std::uint64_t) { return ag::sum(ag::mul(v, v)); }},
    OpCase{"mean", {3, 3}, false, [](const ag::Var& v, std::uint64_t) { return ag::mean(ag::mul(v, v)); }},
    OpCase{"mean_rows", {4, 3}, false, [](const ag::Var& v, std::uint64_t s) { return weighted_sum(ag::mean_rows(v), s); }},
    OpCase{"softmax", {3, 5}, false, [](const ag::Var& v, std::uint64_t s) { return weighted_sum(ag::softmax(v, 0.3), s); }},
    OpCase{"log_softmax", {3, 5}, false,
           [](const ag::Var& v, std::uint64_t s) { return weighted_sum(ag::log_softmax(v, 0.3), s); }},
    OpCase{"layer_norm_x", {3, 6}, false,
           [](const ag::Var& v, std::uint64_t s) {
             return weighted_sum(ag::layer_norm(v, ag::Var::constant(random_normal({6}, s + 1)),
                                                ag::Var::constant(random_normal({6}, s + 2))),
                                 s);
           }},
    OpCase{"layer_norm_gamma", {6}, false,
           [](const ag::Var& v, std::uint64_t s) {
             return weighted_sum(ag::layer_norm(ag::Var::constant(random_normal({3, 6}, s + 1)), v,
                                                ag::Var::constant(random_normal({6}, s + 2))),
                                 s);
           }},
    OpCase{"layer_norm_beta", {6}, false,
           [](const ag::Var& v, std::uint64_t s) {
             return weighted_sum(ag::layer_norm(ag::Var::constant(random_normal({3, 6}, s + 1)),
                                                ag::Var::constant(random_normal({6}, s + 2)), v),
                                 s);
           }},
    OpCase{"l2_normalize", {3, 4}, false,
           [](const ag::Var& v, std::uint64_t s) { return weighted_sum(ag::l2_normalize(v), s); }},
    OpCase{"reshape", {2, 6}, false,
           [](const ag::Var& v, std::uint64_t s) { return weighted_sum(ag::reshape(ag::mul(v, v), {3, 4}), s); }},
    OpCase{"concat_rows", {2, 3}, false,
           [](const ag::Var& v, std::uint64_t s) {
             std::vector<ag::Var> p{v, ag::Var::constant(random_normal({1, 3}, s)), ag::mul(v, v)};
             return weighted_sum(ag::concat_rows(p), s);
           }},
    OpCase{"concat_cols", {2, 3}, false,
           [](const ag::Var& v, std::uint64_t s) {
             std::vector<ag::Var> p{ag::mul(v, v), v};
             return weighted_sum(ag::concat_cols(p), s);
           }},
    OpCase{"slice_rows", {4, 3}, false,
           [](const ag::Var& v, std::uint64_t s) { return weighted_sum(ag::slice_rows(v, 1, 3), s); }},
    OpCase{"slice_cols", {3, 4}, false,
           [](const ag::Var& v, std::uint64_t s) { return weighted_sum(ag::slice_cols(v, 1, 3), s); }},
    OpCase{"gather_rows", {4, 3}, false,
           [](const ag::Var& v, std::uint64_t s) {
             std::vector<std::size_t> idx{3, 0, 3, 1};
             return weighted_sum(ag::gather_rows(v, idx), s);
           }},
    OpCase{"scatter_rows_base", {4, 3}, false,
           [](const ag::Var& v, std::uint64_t s) {
             std::vector<std::size_t> idx{2, 0};
             return weighted_sum(ag::scatter_rows(v, idx, ag::Var::constant(random_normal({2, 3}, s))), s);
           }},
    OpCase{"scatter_rows_updates", {2, 3}, false,
           [](const ag::Var& v, std::uint64_t s) {
             std::vector<std::size_t> idx{2, 0};
             return weighted_sum(ag::scatter_rows(ag::Var::constant(random_normal({4, 3}, s)), idx, v), s);
           }},
    OpCase{"repeat_rows", {1, 3}, false,
           [](const ag::Var& v, std::uint64_t s) { return weighted_sum(ag::repeat_rows(v, 4), s); }}};
  return cases;
}

model::ViTConfig tiny_vit_config() {
  model::ViTConfig c;
  c.patch = 4;
  c.dim = 16;
  c.depth = 2;
  c.heads = 2;
  c.head_hidden = 16;
  c.bottleneck = 8;
  c.prototypes = 8;
  c.view_sizes = {16, 8};
  return c;
}

std::vector<GradCheckResult> run_gradcheck_suite(const SuiteOptions& opts) {
  std::map<std::string, GradCheckResult> worst;
  std::vector<std::string> order;
  for (std::size_t k = 0; k < opts.seeds; ++k) {
    const std::uint64_t seed = opts.base_seed + k;
    if (opts.ops) {
      for (const auto& c : op_cases()) {
        Tensor x = c.positive ? random_uniform(c.shape, seed, 0.2, 2.0) : random_normal(c.shape, seed);
        merge(worst, order,
              check_gradient(c.name, [&](const ag::Var& v) { return c.build(v, seed); }, x, opts.eps, opts.tolerance));
      }
    }
    if (opts.backbone) {
      const model::ViTConfig cfg = tiny_vit_config();
      model::ParamSet ps = model::init_params(cfg, seed);
      // wider than the training init so that no tensor has a vanishing gradient
      for (std::size_t i = 0; i < ps.size(); ++i)
        ps.value(i) = random_normal(ps.value(i).shape(), derive_seed({seed, 0x6d6f64656cULL, i}), 0.5);
      const GrayscaleImage global = random_image(16, derive_seed({seed, 1}));
      const GrayscaleImage local = random_image(8, derive_seed({seed, 2}));
      const Tensor w_cls = random_normal({1, cfg.prototypes}, derive_seed({seed, 3}));
      const Tensor w_patch = random_normal({16, cfg.prototypes}, derive_seed({seed, 4}));
      const Tensor w_local = random_normal({4, cfg.prototypes}, derive_seed({seed, 5}));
      const std::size_t mask[] = {2, 5, 11};
      auto results = model::check_param_gradients(
          ps,
          [&](const model::BoundParams& p) {
            model::BackboneOutput g = model::encode(cfg, p, global, mask);
            model::BackboneOutput l = model::encode(cfg, p, local);
            ag::Var a = ag::sum(ag::mul(model::project(cfg, p, g.cls), ag::Var::constant(w_cls)));
            ag::Var b = ag::sum(ag::mul(model::project(cfg, p, g.patches), ag::Var::constant(w_patch)));
            ag::Var c = ag::sum(ag::mul(model::project(cfg, p, l.patches), ag::Var::constant(w_local)));
            return ag::add(ag::add(a, b), c);
          },
          opts.eps, opts.tolerance);
      for (auto& r : results) {
        r.name = "model:" + r.name;
        merge(worst, order, r);
      }
    }
    if (opts.losses) {
      const Tensor t0 = random_probs({1, 8}, derive_seed({seed, 10}));
      const Tensor t1 = random_probs({1, 8}, derive_seed({seed, 11}));
      merge(worst, order,
            check_gradient(
                "loss:dino_image_loss",
                [&](const ag::Var& x) {
                  std::vector<ag::Var> views;
                  for (std::size_t r = 0; r < 4; ++r) views.push_back(ag::log_softmax(ag::slice_rows(x, r, r + 1), 0.1));
                  const Tensor teacher[] = {t0, t1};
                  return ssl::dino_image_loss(teacher, views);
                },
                random_normal({4, 8}, derive_seed({seed, 12})), opts.eps, opts.tolerance));
      const Tensor tp = random_probs({6, 8}, derive_seed({seed, 13}));
      const std::size_t mask[] = {1, 2, 5};
      merge(worst, order,
            check_gradient(
                "loss:ibot_patch_loss",
                [&](const ag::Var& x) { return ssl::ibot_patch_loss(tp, ag::log_softmax(x, 0.1), mask); },
                random_normal({6, 8}, derive_seed({seed, 14})), opts.eps, opts.tolerance));
      merge(worst, order,
            check_gradient(
                "loss:koleo_loss", [&](const ag::Var& x) { return ssl::koleo_loss(ag::softmax(x, 0.1)); },
                random_normal({6, 8}, derive_seed({seed, 15}), 0.3), opts.eps, opts.tolerance));
    }
  }
  std::vector<GradCheckResult> out;
  out.reserve(order.size());
  for (const auto& name : order) out.push_back(worst.at(name));
  return out;
}

}  // namespace gssl::verify
