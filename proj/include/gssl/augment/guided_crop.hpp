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
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "gssl/data/image.hpp"
#include "gssl/geometry.hpp"
#include "gssl/numerics/rng.hpp"

// Content-guided multi-crop augmentation.
//
// Stage 1 thresholds the image at a near-zero intensity and takes the tight
// bounding box B of everything brighter. Stage 2 pads B into a sampling
// region B' and draws random-resized-crop parameters as usual, except that the
// crop's top-left corner is drawn uniformly from the start positions that lie
// in B' *and* keep the crop inside the image. The crop itself may extend past
// B'; only leaving the image is forbidden.
namespace gssl::augment {

/// H x W boolean grid, true where the source intensity exceeds the threshold.
class ContentMask {
 public:
  ContentMask(std::size_t height, std::size_t width) : height_(height), width_(width), cells_(height * width, 0) {}

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  bool at(std::size_t row, std::size_t col) const noexcept { return cells_[row * width_ + col] != 0; }
  void set(std::size_t row, std::size_t col, bool v) noexcept { cells_[row * width_ + col] = v ? 1 : 0; }

 private:
  std::size_t height_, width_;
  std::vector<std::uint8_t> cells_;
};

/// Top-left (i = row, j = column) plus extent. `fallback` marks crops produced
/// by the deterministic fallback rather than by sampling.
struct CropSample {
  std::size_t i = 0;
  std::size_t j = 0;
  std::size_t h = 1;
  std::size_t w = 1;
  bool fallback = false;

  bool operator==(const CropSample&) const = default;
};

struct Range {
  double lo = 0;
  double hi = 0;
};

struct ViewGroupConfig {
  int count = 0;
  std::size_t size = 0;  // square output side in pixels
  Range scale;           // crop area as a fraction of the image area
};

struct MultiCropConfig {
  double theta = 0.02;
  double pad_frac = 0.05;
  ViewGroupConfig global{2, 32, {0.32, 1.0}};
  ViewGroupConfig local{8, 16, {0.05, 0.32}};
  Range aspect{3.0 / 4.0, 4.0 / 3.0};
  double flip_p = 0.5;
  int max_attempts = 10;

  /// Throws ConfigError naming the offending key.
  void validate() const;
};

struct AugmentedViewSet {
  std::vector<GrayscaleImage> global_views;
  std::vector<GrayscaleImage> local_views;
  std::vector<CropSample> global_crops;
  std::vector<CropSample> local_crops;
  std::vector<bool> global_flipped;
  std::vector<bool> local_flipped;
  std::optional<BoundingBox> content_box;  // B; empty when nothing exceeds theta
  BoundingBox sampling_region;             // B' (the full image when B is empty)

  bool operator==(const AugmentedViewSet&) const = default;
};

/// Strict threshold: true exactly where intensity > theta. Requires theta in [0, 1).
ContentMask compute_content_mask(const GrayscaleImage& img, double theta);

/// Tight box over the true cells, or nullopt for an empty mask.
std::optional<BoundingBox> content_bounding_box(const ContentMask& mask);

/// Extends each side by round(pad_frac * side length), then clips to the image.
BoundingBox pad_and_clip(const BoundingBox& box, double pad_frac, std::size_t height, std::size_t width);

/// Random-resized-crop with the top-left restricted to `region`.
///
/// Area fraction is uniform over `scale`, aspect ratio w/h log-uniform over
/// `aspect`. A draw is rejected if the crop does not fit the image or if no
/// start position in `region` keeps it inside the image. After
/// `max_attempts` rejections the crop anchored at the region's top-left and
/// extending to the image's bottom-right corner is returned.
CropSample sample_crop(Rng& rng, const BoundingBox& region, std::size_t height, std::size_t width, Range scale,
                       Range aspect, int max_attempts = 10);

/// Bilinear resampling of the crop to out_h x out_w with half-pixel centers
/// (corners not aligned). Source coordinates are clamped to the crop.
GrayscaleImage resize_bilinear(const GrayscaleImage& img, const CropSample& crop, std::size_t out_h,
                               std::size_t out_w);

GrayscaleImage flip_horizontal(const GrayscaleImage& img);

/// Stage 1 (once) followed by cfg.global.count global and cfg.local.count local views.
AugmentedViewSet multi_crop(const GrayscaleImage& img, const MultiCropConfig& cfg, Rng& rng);

/// Deterministic evaluation view: the content box (or the whole image when
/// empty) resized to size x size.
/// Mean fraction of crop area lying on content, for guided crops (starts in
/// B') and unguided crops (starts anywhere valid). Crop k of both samplers
/// draws from Rng(derive_seed({seed, k})), so scale and aspect draws match.
struct GuidanceComparison {
  double guided = 0;
  double unguided = 0;
  std::size_t crops = 0;
  std::size_t guided_fallbacks = 0;
  double content_fraction = 0;  // share of the image that is content

  double ratio() const { return unguided > 0 ? guided / unguided : 0.0; }
};

GuidanceComparison compare_guidance(const GrayscaleImage& img, const MultiCropConfig& cfg, const ViewGroupConfig& group,
                                    std::size_t crops, std::uint64_t seed);

GrayscaleImage content_view(const GrayscaleImage& img, double theta, std::size_t size);

void to_json(nlohmann::json& j, const MultiCropConfig& c);
void from_json(const nlohmann::json& j, MultiCropConfig& c);
nlohmann::json crop_to_json(const CropSample& c);
nlohmann::json box_to_json(const BoundingBox& b);

}  // namespace gssl::augment
