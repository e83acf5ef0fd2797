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

#include <array>
#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

#include "gssl/data/image.hpp"
#include "gssl/geometry.hpp"
#include "gssl/numerics/rng.hpp"

namespace gssl {

/// Axis-aligned ellipse in continuous pixel coordinates: pixel (row r, col c)
/// covers [c, c+1) x [r, r+1).
struct Ellipse {
  double cx = 0, cy = 0, rx = 1, ry = 1;
  double intensity = 0.5;
};

struct Nodule {
  double cx = 0, cy = 0, radius = 1;
  double intensity = 1.0;
};

/// Geometry of a synthetic chest-like image: a body ellipse inside a
/// zero-intensity border, two darker lung ellipses, and optional bright
/// nodules inside the lungs.
struct PhantomSpec {
  std::size_t height = 64;
  std::size_t width = 64;
  double margin = 8;
  Ellipse body;
  std::array<Ellipse, 2> lungs;
  std::vector<Nodule> nodules;
  /// Multiplicative texture amplitude in [0, 1).
  double noise = 0.05;

  /// 1 when any nodule is present, 0 otherwise.
  int label() const noexcept { return nodules.empty() ? 0 : 1; }
  /// Throws ValidationError when the geometry violates its invariants.
  void validate() const;
};

struct Phantom {
  GrayscaleImage image;
  BoundingBox box;  // tight box of pixels with intensity > 0
  int label = 0;
};

/// Renders with 4x4 supersampled ellipse coverage. The returned box is derived
/// from the ellipse equations, not from scanning the rendered pixels.
Phantom generate_phantom(const PhantomSpec& spec, std::uint64_t seed);

/// Distribution over phantom specs used to build corpora.
struct PhantomTemplate {
  std::size_t size = 64;
  double margin = 8;
  std::array<double, 2> body_extent{0.80, 1.0};  // fraction of the space inside the margin
  std::array<double, 2> body_intensity{0.45, 0.65};
  std::array<double, 2> lung_intensity{0.12, 0.25};
  double nodule_probability = 0.5;
  std::array<double, 2> nodule_radius{2.5, 4.0};
  std::array<double, 2> nodule_intensity{0.85, 1.0};
  int max_nodules = 2;
  double noise = 0.05;

  void validate() const;
};

PhantomSpec sample_phantom_spec(const PhantomTemplate& tmpl, Rng& rng);

void to_json(nlohmann::json& j, const PhantomSpec& s);
void from_json(const nlohmann::json& j, PhantomSpec& s);
void to_json(nlohmann::json& j, const PhantomTemplate& t);
void from_json(const nlohmann::json& j, PhantomTemplate& t);

}  // namespace gssl
