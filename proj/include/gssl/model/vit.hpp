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
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "gssl/data/image.hpp"
#include "gssl/model/params.hpp"
#include "gssl/numerics/autograd.hpp"
#include "gssl/numerics/rng.hpp"

namespace gssl::model {

/// Single-channel ViT encoder plus the projection head on top of it.
struct ViTConfig {
  std::size_t patch = 4;
  std::size_t dim = 64;
  std::size_t depth = 4;
  std::size_t heads = 4;
  std::size_t mlp_ratio = 4;
  std::vector<std::size_t> view_sizes{32, 16};
  // projection head
  std::size_t head_hidden = 128;
  std::size_t bottleneck = 32;
  std::size_t prototypes = 256;  // K

  /// Throws ConfigError naming the offending key.
  void validate() const;
  std::size_t grid(std::size_t side) const { return side / patch; }
  std::size_t tokens(std::size_t side) const { return grid(side) * grid(side); }
};

struct BackboneOutput {
  ag::Var cls;      // [1 x d]
  ag::Var patches;  // [N x d]
};

/// Registers backbone ("backbone.*") and head ("head.*") parameters.
/// Weights, tokens and positional tables are truncated-normal (std 0.02),
/// biases zero, layer-norm gains one.
ParamSet init_params(const ViTConfig& cfg, std::uint64_t seed);

/// [N x p^2] patch matrix in row-major patch order. Throws ConfigError when
/// the image side is not a multiple of p or the image is not square.
Tensor patchify(const GrayscaleImage& img, std::size_t patch);

/// Encodes one view. Patch embeddings at `mask` indices are replaced by the
/// mask token before positional embeddings are added.
BackboneOutput encode(const ViTConfig& cfg, const BoundParams& params, const GrayscaleImage& view,
                      std::span<const std::size_t> mask = {});

/// MLP -> L2 normalize -> cosine similarity with L2-normalized prototypes.
/// Returns [rows x K] logits in [-1, 1]; temperatures are applied by the losses.
ag::Var project(const ViTConfig& cfg, const BoundParams& params, const ag::Var& features);

void to_json(nlohmann::json& j, const ViTConfig& c);
void from_json(const nlohmann::json& j, ViTConfig& c);

}  // namespace gssl::model
