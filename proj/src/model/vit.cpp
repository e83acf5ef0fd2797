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


#include "gssl/model/vit.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gssl/errors.hpp"
#include "gssl/json_util.hpp"

namespace gssl::model {

using json_util::read_optional;
using json_util::reject_unknown_keys;

namespace {

Tensor trunc_normal(Shape shape, Rng& rng, double std) {
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = rng.truncated_normal(std);
  return t;
}

void add_linear(ParamSet& ps, const std::string& prefix, std::size_t in, std::size_t out, Rng& rng) {
  ps.add(prefix + ".weight", trunc_normal({in, out}, rng, 0.02), true);
  ps.add(prefix + ".bias", Tensor({out}, 0.0), true);
}

void add_norm(ParamSet& ps, const std::string& prefix, std::size_t d) {
  ps.add(prefix + ".weight", Tensor({d}, 1.0), true);
  ps.add(prefix + ".bias", Tensor({d}, 0.0), true);
}

ag::Var linear(const BoundParams& p, const std::string& prefix, const ag::Var& x) {
  return ag::add_rowwise(ag::matmul(x, p[prefix + ".weight"]), p[prefix + ".bias"]);
}

ag::Var norm(const BoundParams& p, const std::string& prefix, const ag::Var& x) {
  return ag::layer_norm(x, p[prefix + ".weight"], p[prefix + ".bias"]);
}

ag::Var attention(const ViTConfig& cfg, const BoundParams& p, const std::string& prefix, const ag::Var& x) {
  const std::size_t d = cfg.dim;
  const std::size_t dh = d / cfg.heads;
  ag::Var qkv = linear(p, prefix + ".qkv", x);
  std::vector<ag::Var> outs;
  outs.reserve(cfg.heads);
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  for (std::size_t h = 0; h < cfg.heads; ++h) {
    ag::Var q = ag::slice_cols(qkv, h * dh, (h + 1) * dh);
    ag::Var k = ag::slice_cols(qkv, d + h * dh, d + (h + 1) * dh);
    ag::Var v = ag::slice_cols(qkv, 2 * d + h * dh, 2 * d + (h + 1) * dh);
    ag::Var att = ag::softmax(ag::scale(ag::matmul(q, ag::transpose(k)), inv_sqrt));
    outs.push_back(ag::matmul(att, v));
  }
  ag::Var merged = cfg.heads == 1 ? outs.front() : ag::concat_cols(outs);
  return linear(p, prefix + ".proj", merged);
}

}  // namespace

void ViTConfig::validate() const {
  if (patch == 0) throw ConfigError("model.patch", "patch size must be positive");
  if (dim == 0) throw ConfigError("model.dim", "embedding dim must be positive");
  if (depth == 0) throw ConfigError("model.depth", "depth must be positive");
  if (heads == 0 || dim % heads != 0) throw ConfigError("model.heads", "dim must be divisible by the head count");
  if (mlp_ratio == 0) throw ConfigError("model.mlp_ratio", "MLP ratio must be positive");
  if (view_sizes.empty()) throw ConfigError("model.view_sizes", "at least one view size is required");
  for (std::size_t s : view_sizes)
    if (s == 0 || s % patch != 0)
      throw ConfigError("model.view_sizes", "view size " + std::to_string(s) + " is not divisible by patch size");
  if (head_hidden == 0) throw ConfigError("model.head_hidden", "head width must be positive");
  if (bottleneck == 0) throw ConfigError("model.bottleneck", "bottleneck must be positive");
  if (prototypes < 2) throw ConfigError("model.prototypes", "need at least 2 prototypes");
}

ParamSet init_params(const ViTConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  ParamSet ps;
  const std::size_t d = cfg.dim;
  add_linear(ps, "backbone.patch_embed", cfg.patch * cfg.patch, d, rng);
  ps.add("backbone.cls_token", trunc_normal({1, d}, rng, 0.02), false);
  ps.add("backbone.mask_token", trunc_normal({1, d}, rng, 0.02), false);
  for (std::size_t s : cfg.view_sizes)
    ps.add("backbone.pos_embed." + std::to_string(s), trunc_normal({cfg.tokens(s) + 1, d}, rng, 0.02), false);
  for (std::size_t b = 0; b < cfg.depth; ++b) {
    const std::string pre = "backbone.blocks." + std::to_string(b);
    add_norm(ps, pre + ".norm1", d);
    add_linear(ps, pre + ".attn.qkv", d, 3 * d, rng);
    add_linear(ps, pre + ".attn.proj", d, d, rng);
    add_norm(ps, pre + ".norm2", d);
    add_linear(ps, pre + ".mlp.fc1", d, d * cfg.mlp_ratio, rng);
    add_linear(ps, pre + ".mlp.fc2", d * cfg.mlp_ratio, d, rng);
  }
  add_norm(ps, "backbone.norm", d);
  add_linear(ps, "head.fc1", d, cfg.head_hidden, rng);
  add_linear(ps, "head.fc2", cfg.head_hidden, cfg.head_hidden, rng);
  add_linear(ps, "head.fc3", cfg.head_hidden, cfg.bottleneck, rng);
  ps.add("head.prototypes", trunc_normal({cfg.prototypes, cfg.bottleneck}, rng, 0.02), true);
  return ps;
}

Tensor patchify(const GrayscaleImage& img, std::size_t patch) {
  const std::size_t side = img.height();
  if (patch == 0 || img.width() != side) throw ConfigError("model.view_sizes", "views must be square");
  if (side % patch != 0)
    throw ConfigError("model.patch", "side " + std::to_string(side) + " is not divisible by patch size " +
                                   std::to_string(patch));
  const std::size_t g = side / patch;
  Tensor out({g * g, patch * patch});
  for (std::size_t pr = 0; pr < g; ++pr)
    for (std::size_t pc = 0; pc < g; ++pc) {
      double* row = out.data().data() + (pr * g + pc) * patch * patch;
      for (std::size_t y = 0; y < patch; ++y)
        for (std::size_t x = 0; x < patch; ++x) row[y * patch + x] = img.at(pr * patch + y, pc * patch + x);
    }
  return out;
}

BackboneOutput encode(const ViTConfig& cfg, const BoundParams& p, const GrayscaleImage& view,
                      std::span<const std::size_t> mask) {
  const std::size_t side = view.height();
  if (view.width() != side || std::find(cfg.view_sizes.begin(), cfg.view_sizes.end(), side) == cfg.view_sizes.end())
    throw ConfigError("model.view_sizes", "unsupported view size " + std::to_string(view.height()) + "x" +
                                        std::to_string(view.width()));
  const std::size_t n = cfg.tokens(side);
  for (std::size_t m : mask)
    if (m >= n) throw DimensionError("mask index " + std::to_string(m) + " out of range for " + std::to_string(n) + " patches");

  ag::Var x = linear(p, "backbone.patch_embed", ag::Var::constant(patchify(view, cfg.patch)));
  if (!mask.empty()) x = ag::scatter_rows(x, mask, ag::repeat_rows(p["backbone.mask_token"], mask.size()));
  const ag::Var parts[] = {p["backbone.cls_token"], x};
  ag::Var t = ag::add(ag::concat_rows(parts), p["backbone.pos_embed." + std::to_string(side)]);

  for (std::size_t b = 0; b < cfg.depth; ++b) {
    const std::string pre = "backbone.blocks." + std::to_string(b);
    t = ag::add(t, attention(cfg, p, pre + ".attn", norm(p, pre + ".norm1", t)));
    ag::Var h = ag::gelu(linear(p, pre + ".mlp.fc1", norm(p, pre + ".norm2", t)));
    t = ag::add(t, linear(p, pre + ".mlp.fc2", h));
  }
  t = norm(p, "backbone.norm", t);
  return {ag::slice_rows(t, 0, 1), ag::slice_rows(t, 1, n + 1)};
}

ag::Var project(const ViTConfig& cfg, const BoundParams& p, const ag::Var& features) {
  ag::Var x = features.value().rank() == 1 ? ag::reshape(features, {1, features.value().size()}) : features;
  if (x.value().rank() != 2 || x.value().cols() != cfg.dim)
    throw DimensionError("projection head expects " + std::to_string(cfg.dim) + " input features");
  x = ag::gelu(linear(p, "head.fc1", x));
  x = ag::gelu(linear(p, "head.fc2", x));
  x = ag::l2_normalize(linear(p, "head.fc3", x));
  ag::Var protos = ag::l2_normalize(p["head.prototypes"]);
  return ag::matmul(x, ag::transpose(protos));
}

void to_json(nlohmann::json& j, const ViTConfig& c) {
  j = {{"patch", c.patch},           {"dim", c.dim},
       {"depth", c.depth},           {"heads", c.heads},
       {"mlp_ratio", c.mlp_ratio},   {"view_sizes", c.view_sizes},
       {"head_hidden", c.head_hidden}, {"bottleneck", c.bottleneck},
       {"prototypes", c.prototypes}};
}

void from_json(const nlohmann::json& j, ViTConfig& c) {
  reject_unknown_keys(j, {"patch", "dim", "depth", "heads", "mlp_ratio", "view_sizes", "head_hidden", "bottleneck", "prototypes"},
                      "model");
  read_optional(j, "patch", c.patch, "model");
  read_optional(j, "dim", c.dim, "model");
  read_optional(j, "depth", c.depth, "model");
  read_optional(j, "heads", c.heads, "model");
  read_optional(j, "mlp_ratio", c.mlp_ratio, "model");
  read_optional(j, "view_sizes", c.view_sizes, "model");
  read_optional(j, "head_hidden", c.head_hidden, "model");
  read_optional(j, "bottleneck", c.bottleneck, "model");
  read_optional(j, "prototypes", c.prototypes, "model");
  c.validate();
}

}  // namespace gssl::model
