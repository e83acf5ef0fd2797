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


#include "gssl/augment/guided_crop.hpp"

#include <algorithm>
#include <cmath>

#include "gssl/errors.hpp"
#include "gssl/json_util.hpp"

namespace gssl::augment {

void MultiCropConfig::validate() const {
  if (!(theta >= 0.0 && theta < 1.0)) throw ConfigError("theta", "must be in [0, 1)");
  if (!(pad_frac >= 0.0)) throw ConfigError("pad_frac", "must be nonnegative");
  auto check_group = [](const ViewGroupConfig& g, const std::string& name) {
    if (g.count < 0) throw ConfigError(name + ".count", "must be nonnegative");
    if (g.size == 0) throw ConfigError(name + ".size", "must be positive");
    if (!(g.scale.lo > 0.0 && g.scale.lo <= g.scale.hi && g.scale.hi <= 1.0))
      throw ConfigError(name + ".scale", "must be an ordered range inside (0, 1]");
  };
  check_group(global, "global");
  check_group(local, "local");
  if (!(aspect.lo > 0.0 && aspect.lo <= aspect.hi)) throw ConfigError("aspect", "must be an ordered positive range");
  if (!(flip_p >= 0.0 && flip_p <= 1.0)) throw ConfigError("flip_p", "must be in [0, 1]");
  if (max_attempts < 1) throw ConfigError("max_attempts", "must be at least 1");
}

ContentMask compute_content_mask(const GrayscaleImage& img, double theta) {
  if (!(theta >= 0.0 && theta < 1.0)) throw ParameterError("content threshold must be in [0, 1)");
  ContentMask mask(img.height(), img.width());
  for (std::size_t r = 0; r < img.height(); ++r)
    for (std::size_t c = 0; c < img.width(); ++c) mask.set(r, c, img.at(r, c) > theta);
  return mask;
}

std::optional<BoundingBox> content_bounding_box(const ContentMask& mask) {
  std::optional<BoundingBox> box;
  for (std::size_t r = 0; r < mask.height(); ++r) {
    for (std::size_t c = 0; c < mask.width(); ++c) {
      if (!mask.at(r, c)) continue;
      if (!box) {
        box = BoundingBox{c, r, c, r};
      } else {
        box->x_min = std::min(box->x_min, c);
        box->x_max = std::max(box->x_max, c);
        box->y_max = r;  // rows are visited in increasing order
      }
    }
  }
  return box;
}

BoundingBox pad_and_clip(const BoundingBox& box, double pad_frac, std::size_t height, std::size_t width) {
  const auto pad_x = static_cast<long>(std::lround(pad_frac * static_cast<double>(box.width())));
  const auto pad_y = static_cast<long>(std::lround(pad_frac * static_cast<double>(box.height())));
  auto lower = [](std::size_t v, long pad) { return static_cast<std::size_t>(std::max(0L, static_cast<long>(v) - pad)); };
  auto upper = [](std::size_t v, long pad, std::size_t extent) {
    return static_cast<std::size_t>(std::min(static_cast<long>(extent) - 1, static_cast<long>(v) + pad));
  };
  return {lower(box.x_min, pad_x), lower(box.y_min, pad_y), upper(box.x_max, pad_x, width),
          upper(box.y_max, pad_y, height)};
}

CropSample sample_crop(Rng& rng, const BoundingBox& region, std::size_t height, std::size_t width, Range scale,
                       Range aspect, int max_attempts) {
  const double area = static_cast<double>(height) * static_cast<double>(width);
  const double log_lo = std::log(aspect.lo), log_hi = std::log(aspect.hi);
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    const double target = area * rng.uniform(scale.lo, scale.hi);
    const double ratio = std::exp(rng.uniform(log_lo, log_hi));
    const long w = std::lround(std::sqrt(target * ratio));
    const long h = std::lround(std::sqrt(target / ratio));
    if (w < 1 || h < 1 || w > static_cast<long>(width) || h > static_cast<long>(height)) continue;
    // Valid starts: inside the region and leaving room for the crop.
    const long i_lo = static_cast<long>(region.y_min);
    const long j_lo = static_cast<long>(region.x_min);
    const long i_hi = std::min(static_cast<long>(region.y_max), static_cast<long>(height) - h);
    const long j_hi = std::min(static_cast<long>(region.x_max), static_cast<long>(width) - w);
    if (i_lo > i_hi || j_lo > j_hi) continue;
    CropSample c;
    c.i = static_cast<std::size_t>(rng.uniform_int(i_lo, i_hi));
    c.j = static_cast<std::size_t>(rng.uniform_int(j_lo, j_hi));
    c.h = static_cast<std::size_t>(h);
    c.w = static_cast<std::size_t>(w);
    return c;
  }
  return CropSample{region.y_min, region.x_min, height - region.y_min, width - region.x_min, true};
}

GrayscaleImage resize_bilinear(const GrayscaleImage& img, const CropSample& crop, std::size_t out_h,
                               std::size_t out_w) {
  if (crop.h == 0 || crop.w == 0 || crop.i + crop.h > img.height() || crop.j + crop.w > img.width())
    throw ValidationError("crop rectangle lies outside the image");
  GrayscaleImage out(out_h, out_w);
  const double sy = static_cast<double>(crop.h) / static_cast<double>(out_h);
  const double sx = static_cast<double>(crop.w) / static_cast<double>(out_w);
  const double max_y = static_cast<double>(crop.h - 1), max_x = static_cast<double>(crop.w - 1);
  for (std::size_t oy = 0; oy < out_h; ++oy) {
    const double fy = std::clamp((static_cast<double>(oy) + 0.5) * sy - 0.5, 0.0, max_y);
    const auto y0 = static_cast<std::size_t>(fy);
    const std::size_t y1 = std::min(y0 + 1, crop.h - 1);
    const double wy = fy - static_cast<double>(y0);
    for (std::size_t ox = 0; ox < out_w; ++ox) {
      const double fx = std::clamp((static_cast<double>(ox) + 0.5) * sx - 0.5, 0.0, max_x);
      const auto x0 = static_cast<std::size_t>(fx);
      const std::size_t x1 = std::min(x0 + 1, crop.w - 1);
      const double wx = fx - static_cast<double>(x0);
      const double a = img.at(crop.i + y0, crop.j + x0), b = img.at(crop.i + y0, crop.j + x1);
      const double c = img.at(crop.i + y1, crop.j + x0), d = img.at(crop.i + y1, crop.j + x1);
      const double top = a + (b - a) * wx;
      const double bottom = c + (d - c) * wx;
      out.at(oy, ox) = std::clamp(top + (bottom - top) * wy, 0.0, 1.0);
    }
  }
  return out;
}

GrayscaleImage flip_horizontal(const GrayscaleImage& img) {
  GrayscaleImage out(img.height(), img.width());
  for (std::size_t r = 0; r < img.height(); ++r)
    for (std::size_t c = 0; c < img.width(); ++c) out.at(r, c) = img.at(r, img.width() - 1 - c);
  return out;
}

AugmentedViewSet multi_crop(const GrayscaleImage& img, const MultiCropConfig& cfg, Rng& rng) {
  cfg.validate();
  const std::size_t H = img.height(), W = img.width();
  AugmentedViewSet out;
  out.content_box = content_bounding_box(compute_content_mask(img, cfg.theta));
  out.sampling_region = out.content_box ? pad_and_clip(*out.content_box, cfg.pad_frac, H, W) : BoundingBox::full(H, W);

  auto make_views = [&](const ViewGroupConfig& g, std::vector<GrayscaleImage>& views, std::vector<CropSample>& crops,
                        std::vector<bool>& flipped) {
    for (int v = 0; v < g.count; ++v) {
      const auto crop = sample_crop(rng, out.sampling_region, H, W, g.scale, cfg.aspect, cfg.max_attempts);
      auto view = resize_bilinear(img, crop, g.size, g.size);
      const bool flip = rng.bernoulli(cfg.flip_p);
      views.push_back(flip ? flip_horizontal(view) : std::move(view));
      crops.push_back(crop);
      flipped.push_back(flip);
    }
  };
  make_views(cfg.global, out.global_views, out.global_crops, out.global_flipped);
  make_views(cfg.local, out.local_views, out.local_crops, out.local_flipped);
  return out;
}

GrayscaleImage content_view(const GrayscaleImage& img, double theta, std::size_t size) {
  const auto box = content_bounding_box(compute_content_mask(img, theta));
  const BoundingBox b = box ? *box : BoundingBox::full(img.height(), img.width());
  return resize_bilinear(img, CropSample{b.y_min, b.x_min, b.height(), b.width(), false}, size, size);
}

// --- JSON ----------------------------------------------------------------------

namespace {

nlohmann::json group_json(const ViewGroupConfig& g) {
  return {{"count", g.count}, {"size", g.size}, {"scale", {g.scale.lo, g.scale.hi}}};
}

Range range_from(const nlohmann::json& j, const std::string& key) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw ConfigError(key, "expected [lo, hi]");
  return {j[0].get<double>(), j[1].get<double>()};
}

void group_from(const nlohmann::json& j, ViewGroupConfig& g, const std::string& name) {
  json_util::reject_unknown_keys(j, {"count", "size", "scale"}, name);
  json_util::read_optional(j, "count", g.count, name);
  json_util::read_optional(j, "size", g.size, name);
  if (j.contains("scale")) g.scale = range_from(j.at("scale"), name + ".scale");
}

}  // namespace

void to_json(nlohmann::json& j, const MultiCropConfig& c) {
  j = {{"theta", c.theta},
       {"pad_frac", c.pad_frac},
       {"global", group_json(c.global)},
       {"local", group_json(c.local)},
       {"aspect", {c.aspect.lo, c.aspect.hi}},
       {"flip_p", c.flip_p},
       {"max_attempts", c.max_attempts}};
}

void from_json(const nlohmann::json& j, MultiCropConfig& c) {
  json_util::reject_unknown_keys(j, {"theta", "pad_frac", "global", "local", "aspect", "flip_p", "max_attempts"},
                                 "augment");
  json_util::read_optional(j, "theta", c.theta, "augment");
  json_util::read_optional(j, "pad_frac", c.pad_frac, "augment");
  if (j.contains("global")) group_from(j.at("global"), c.global, "augment.global");
  if (j.contains("local")) group_from(j.at("local"), c.local, "augment.local");
  if (j.contains("aspect")) c.aspect = range_from(j.at("aspect"), "augment.aspect");
  json_util::read_optional(j, "flip_p", c.flip_p, "augment");
  json_util::read_optional(j, "max_attempts", c.max_attempts, "augment");
}

nlohmann::json crop_to_json(const CropSample& c) {
  return {{"i", c.i}, {"j", c.j}, {"h", c.h}, {"w", c.w}, {"fallback", c.fallback}};
}

GuidanceComparison compare_guidance(const GrayscaleImage& img, const MultiCropConfig& cfg, const ViewGroupConfig& group,
                                    std::size_t crops, std::uint64_t seed) {
  cfg.validate();
  const std::size_t H = img.height(), W = img.width();
  const ContentMask mask = compute_content_mask(img, cfg.theta);
  // Summed-area table for O(1) content counts per rectangle.
  std::vector<std::size_t> sat((H + 1) * (W + 1), 0);
  for (std::size_t r = 0; r < H; ++r)
    for (std::size_t c = 0; c < W; ++c)
      sat[(r + 1) * (W + 1) + c + 1] = (mask.at(r, c) ? 1 : 0) + sat[r * (W + 1) + c + 1] +
                                       sat[(r + 1) * (W + 1) + c] - sat[r * (W + 1) + c];
  auto overlap = [&](const CropSample& k) {
    const std::size_t r1 = k.i + k.h, c1 = k.j + k.w;
    const std::size_t n = sat[r1 * (W + 1) + c1] - sat[k.i * (W + 1) + c1] - sat[r1 * (W + 1) + k.j] +
                          sat[k.i * (W + 1) + k.j];
    return static_cast<double>(n) / static_cast<double>(k.h * k.w);
  };

  const auto box = content_bounding_box(mask);
  const BoundingBox whole{0, 0, W - 1, H - 1};
  const BoundingBox region = box ? pad_and_clip(*box, cfg.pad_frac, H, W) : whole;
  GuidanceComparison out;
  out.crops = crops;
  out.content_fraction = static_cast<double>(sat.back()) / static_cast<double>(H * W);
  for (std::size_t k = 0; k < crops; ++k) {
    Rng a(derive_seed({seed, k})), b(derive_seed({seed, k}));
    const CropSample g = sample_crop(a, region, H, W, group.scale, cfg.aspect, cfg.max_attempts);
    const CropSample u = sample_crop(b, whole, H, W, group.scale, cfg.aspect, cfg.max_attempts);
    out.guided_fallbacks += g.fallback ? 1 : 0;
    out.guided += overlap(g);
    out.unguided += overlap(u);
  }
  if (crops > 0) {
    out.guided /= static_cast<double>(crops);
    out.unguided /= static_cast<double>(crops);
  }
  return out;
}

nlohmann::json box_to_json(const BoundingBox& b) {
  return {{"x_min", b.x_min}, {"y_min", b.y_min}, {"x_max", b.x_max}, {"y_max", b.y_max}};
}

}  // namespace gssl::augment
