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


#include "gssl/data/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "gssl/errors.hpp"
#include "gssl/json_util.hpp"

namespace gssl {
namespace {

constexpr int kSubsamples = 4;

bool inside(const Ellipse& e, double x, double y) {
  const double dx = (x - e.cx) / e.rx;
  const double dy = (y - e.cy) / e.ry;
  return dx * dx + dy * dy < 1.0;
}

Ellipse as_ellipse(const Nodule& n) { return {n.cx, n.cy, n.radius, n.radius, n.intensity}; }

double sub_coord(long q) { return (static_cast<double>(q) + 0.5) / kSubsamples; }

// Axis-aligned box of `inner` lies strictly inside `outer` (sufficient for
// containment because ellipses are convex).
bool box_inside(const Ellipse& inner, const Ellipse& outer) {
  for (double sx : {-1.0, 1.0})
    for (double sy : {-1.0, 1.0})
      if (!inside(outer, inner.cx + sx * inner.rx, inner.cy + sy * inner.ry)) return false;
  return true;
}

void check_intensity(double v, const char* what) {
  if (!(v > 0.0 && v <= 1.0)) throw ValidationError(std::string(what) + " intensity must be in (0, 1]");
}

// Subsample column interval [lo, hi] inside `e` on subsample row coordinate y.
std::optional<std::pair<long, long>> row_interval(const Ellipse& e, double y, long columns) {
  const double dy = (y - e.cy) / e.ry;
  const double t = 1.0 - dy * dy;
  if (t <= 0.0) return std::nullopt;
  const double half = e.rx * std::sqrt(t);
  long lo = std::clamp(static_cast<long>(std::ceil((e.cx - half) * kSubsamples - 0.5)), 0L, columns - 1);
  long hi = std::clamp(static_cast<long>(std::floor((e.cx + half) * kSubsamples - 0.5)), 0L, columns - 1);
  // The closed-form bounds can be off by one at the boundary; settle them
  // with the same predicate the renderer uses.
  while (lo > 0 && inside(e, sub_coord(lo - 1), y)) --lo;
  while (lo < columns && !inside(e, sub_coord(lo), y)) ++lo;
  if (lo == columns) return std::nullopt;
  hi = std::max(hi, lo);
  while (hi + 1 < columns && inside(e, sub_coord(hi + 1), y)) ++hi;
  while (hi > lo && !inside(e, sub_coord(hi), y)) --hi;
  return std::pair{lo, hi};
}

}  // namespace

void PhantomSpec::validate() const {
  if (height == 0 || width == 0) throw ValidationError("phantom canvas must be at least 1x1");
  if (!(margin >= 0.0)) throw ValidationError("phantom margin must be nonnegative");
  if (!(noise >= 0.0 && noise < 1.0)) throw ValidationError("phantom noise must be in [0, 1)");
  if (!(body.rx > 0 && body.ry > 0)) throw ValidationError("body radii must be positive");
  check_intensity(body.intensity, "body");
  if (!(body.cx - body.rx > margin && body.cx + body.rx < static_cast<double>(width) - margin &&
        body.cy - body.ry > margin && body.cy + body.ry < static_cast<double>(height) - margin))
    throw ValidationError("body ellipse must lie strictly inside the border margin");
  for (const auto& lung : lungs) {
    if (!(lung.rx > 0 && lung.ry > 0)) throw ValidationError("lung radii must be positive");
    check_intensity(lung.intensity, "lung");
    if (!box_inside(lung, body)) throw ValidationError("lung ellipse must lie inside the body ellipse");
  }
  for (const auto& n : nodules) {
    if (!(n.radius > 0)) throw ValidationError("nodule radius must be positive");
    check_intensity(n.intensity, "nodule");
    const auto e = as_ellipse(n);
    if (!box_inside(e, lungs[0]) && !box_inside(e, lungs[1]))
      throw ValidationError("nodule must lie inside a lung ellipse");
  }
}

Phantom generate_phantom(const PhantomSpec& spec, std::uint64_t seed) {
  spec.validate();
  const std::size_t H = spec.height, W = spec.width;
  GrayscaleImage img(H, W);
  Rng rng(seed);
  const double inv = 1.0 / (kSubsamples * kSubsamples);
  for (std::size_t r = 0; r < H; ++r) {
    for (std::size_t c = 0; c < W; ++c) {
      double acc = 0.0;
      for (int ky = 0; ky < kSubsamples; ++ky) {
        const double y = sub_coord(static_cast<long>(r) * kSubsamples + ky);
        for (int kx = 0; kx < kSubsamples; ++kx) {
          const double x = sub_coord(static_cast<long>(c) * kSubsamples + kx);
          if (!inside(spec.body, x, y)) continue;
          double v = spec.body.intensity;
          for (const auto& lung : spec.lungs)
            if (inside(lung, x, y)) v = lung.intensity;
          for (const auto& n : spec.nodules)
            if (inside(as_ellipse(n), x, y)) v = n.intensity;
          acc += v;
        }
      }
      const double texture = 1.0 + spec.noise * (2.0 * rng.uniform() - 1.0);
      img.at(r, c) = acc > 0.0 ? std::min(1.0, acc * inv * texture) : 0.0;
    }
  }

  // Lungs and nodules lie inside the body, so the support is the body's.
  const long cols = static_cast<long>(W) * kSubsamples;
  BoundingBox box{W, H, 0, 0};
  bool any = false;
  for (long p = 0; p < static_cast<long>(H) * kSubsamples; ++p) {
    const auto iv = row_interval(spec.body, sub_coord(p), cols);
    if (!iv) continue;
    const std::size_t row = static_cast<std::size_t>(p / kSubsamples);
    box.x_min = std::min(box.x_min, static_cast<std::size_t>(iv->first / kSubsamples));
    box.x_max = std::max(box.x_max, static_cast<std::size_t>(iv->second / kSubsamples));
    box.y_min = any ? box.y_min : row;
    box.y_max = row;
    any = true;
  }
  if (!any) throw ValidationError("phantom body covers no subsample");
  return Phantom{std::move(img), box, spec.label()};
}

void PhantomTemplate::validate() const {
  auto range_ok = [](const std::array<double, 2>& r) { return r[0] <= r[1]; };
  if (size < 8) throw ValidationError("phantom template size must be at least 8");
  if (!(margin >= 0 && 2 * margin + 4 < static_cast<double>(size)))
    throw ValidationError("phantom template margin leaves no room for the body");
  if (!range_ok(body_extent) || !(body_extent[0] > 0.3 && body_extent[1] <= 1.0))
    throw ValidationError("body_extent must be an ordered range within (0.3, 1]");
  if (!(nodule_probability >= 0.0 && nodule_probability <= 1.0))
    throw ValidationError("nodule_probability must be in [0, 1]");
  if (!range_ok(nodule_radius) || !(nodule_radius[0] > 0)) throw ValidationError("nodule_radius must be positive");
  if (!range_ok(body_intensity) || !range_ok(lung_intensity) || !range_ok(nodule_intensity))
    throw ValidationError("intensity ranges must be ordered");
  if (max_nodules < 1) throw ValidationError("max_nodules must be at least 1");
  if (!(noise >= 0.0 && noise < 1.0)) throw ValidationError("noise must be in [0, 1)");
}

PhantomSpec sample_phantom_spec(const PhantomTemplate& t, Rng& rng) {
  t.validate();
  PhantomSpec s;
  s.height = s.width = t.size;
  s.margin = t.margin;
  s.noise = t.noise;
  const double half_space = (static_cast<double>(t.size) - 2.0 * t.margin) / 2.0;
  const double mid = static_cast<double>(t.size) / 2.0;
  auto draw = [&](const std::array<double, 2>& r) { return rng.uniform(r[0], r[1]); };

  s.body.rx = 0.999 * half_space * draw(t.body_extent);
  s.body.ry = 0.999 * half_space * draw(t.body_extent);
  s.body.cx = mid + rng.uniform(-1.0, 1.0) * 0.999 * (half_space - s.body.rx);
  s.body.cy = mid + rng.uniform(-1.0, 1.0) * 0.999 * (half_space - s.body.ry);
  s.body.intensity = draw(t.body_intensity);

  for (int side = 0; side < 2; ++side) {
    Ellipse& lung = s.lungs[side];
    const double sign = side == 0 ? -1.0 : 1.0;
    lung.rx = s.body.rx * rng.uniform(0.27, 0.31);
    lung.ry = s.body.ry * rng.uniform(0.52, 0.58);
    lung.cx = s.body.cx + sign * s.body.rx * rng.uniform(0.40, 0.44);
    lung.cy = s.body.cy + s.body.ry * rng.uniform(-0.04, 0.04);
    lung.intensity = draw(t.lung_intensity);
  }

  if (rng.bernoulli(t.nodule_probability)) {
    const auto count = rng.uniform_int(1, t.max_nodules);
    for (std::int64_t k = 0; k < count; ++k) {
      const Ellipse& lung = s.lungs[static_cast<std::size_t>(rng.uniform_int(0, 1))];
      Nodule n;
      n.intensity = draw(t.nodule_intensity);
      n.radius = std::min(draw(t.nodule_radius), 0.6 * std::min(lung.rx, lung.ry));
      bool placed = false;
      for (int attempt = 0; attempt < 200 && !placed; ++attempt) {
        n.cx = lung.cx + rng.uniform(-1.0, 1.0) * (lung.rx - n.radius);
        n.cy = lung.cy + rng.uniform(-1.0, 1.0) * (lung.ry - n.radius);
        placed = box_inside(as_ellipse(n), lung);
      }
      if (!placed) {
        n.cx = lung.cx;
        n.cy = lung.cy;
      }
      s.nodules.push_back(n);
    }
  }
  return s;
}

// --- JSON ----------------------------------------------------------------------

namespace {

nlohmann::json ellipse_json(const Ellipse& e) {
  return {{"cx", e.cx}, {"cy", e.cy}, {"rx", e.rx}, {"ry", e.ry}, {"intensity", e.intensity}};
}

Ellipse ellipse_from(const nlohmann::json& j, const std::string& ctx) {
  json_util::reject_unknown_keys(j, {"cx", "cy", "rx", "ry", "intensity"}, ctx);
  Ellipse e;
  json_util::read_required(j, "cx", e.cx, ctx);
  json_util::read_required(j, "cy", e.cy, ctx);
  json_util::read_required(j, "rx", e.rx, ctx);
  json_util::read_required(j, "ry", e.ry, ctx);
  json_util::read_required(j, "intensity", e.intensity, ctx);
  return e;
}

}  // namespace

void to_json(nlohmann::json& j, const PhantomSpec& s) {
  nlohmann::json nodules = nlohmann::json::array();
  for (const auto& n : s.nodules)
    nodules.push_back({{"cx", n.cx}, {"cy", n.cy}, {"radius", n.radius}, {"intensity", n.intensity}});
  j = {{"height", s.height},
       {"width", s.width},
       {"margin", s.margin},
       {"body", ellipse_json(s.body)},
       {"lungs", {ellipse_json(s.lungs[0]), ellipse_json(s.lungs[1])}},
       {"nodules", nodules},
       {"noise", s.noise}};
}

void from_json(const nlohmann::json& j, PhantomSpec& s) {
  const std::string ctx = "phantom";
  json_util::reject_unknown_keys(j, {"height", "width", "margin", "body", "lungs", "nodules", "noise"}, ctx);
  json_util::read_required(j, "height", s.height, ctx);
  json_util::read_required(j, "width", s.width, ctx);
  json_util::read_optional(j, "margin", s.margin, ctx);
  json_util::read_optional(j, "noise", s.noise, ctx);
  if (!j.contains("body")) throw ConfigError("phantom.body", "missing required key");
  s.body = ellipse_from(j.at("body"), ctx + ".body");
  if (!j.contains("lungs") || !j.at("lungs").is_array() || j.at("lungs").size() != 2)
    throw ConfigError("phantom.lungs", "expected an array of two ellipses");
  for (std::size_t i = 0; i < 2; ++i) s.lungs[i] = ellipse_from(j.at("lungs")[i], ctx + ".lungs");
  s.nodules.clear();
  if (j.contains("nodules")) {
    for (const auto& nj : j.at("nodules")) {
      json_util::reject_unknown_keys(nj, {"cx", "cy", "radius", "intensity"}, ctx + ".nodules");
      Nodule n;
      json_util::read_required(nj, "cx", n.cx, ctx + ".nodules");
      json_util::read_required(nj, "cy", n.cy, ctx + ".nodules");
      json_util::read_required(nj, "radius", n.radius, ctx + ".nodules");
      json_util::read_required(nj, "intensity", n.intensity, ctx + ".nodules");
      s.nodules.push_back(n);
    }
  }
}

void to_json(nlohmann::json& j, const PhantomTemplate& t) {
  j = {{"size", t.size},
       {"margin", t.margin},
       {"body_extent", t.body_extent},
       {"body_intensity", t.body_intensity},
       {"lung_intensity", t.lung_intensity},
       {"nodule_probability", t.nodule_probability},
       {"nodule_radius", t.nodule_radius},
       {"nodule_intensity", t.nodule_intensity},
       {"max_nodules", t.max_nodules},
       {"noise", t.noise}};
}

void from_json(const nlohmann::json& j, PhantomTemplate& t) {
  const std::string ctx = "template";
  json_util::reject_unknown_keys(j,
                                 {"size", "margin", "body_extent", "body_intensity", "lung_intensity",
                                  "nodule_probability", "nodule_radius", "nodule_intensity", "max_nodules", "noise"},
                                 ctx);
  json_util::read_optional(j, "size", t.size, ctx);
  json_util::read_optional(j, "margin", t.margin, ctx);
  json_util::read_optional(j, "body_extent", t.body_extent, ctx);
  json_util::read_optional(j, "body_intensity", t.body_intensity, ctx);
  json_util::read_optional(j, "lung_intensity", t.lung_intensity, ctx);
  json_util::read_optional(j, "nodule_probability", t.nodule_probability, ctx);
  json_util::read_optional(j, "nodule_radius", t.nodule_radius, ctx);
  json_util::read_optional(j, "nodule_intensity", t.nodule_intensity, ctx);
  json_util::read_optional(j, "max_nodules", t.max_nodules, ctx);
  json_util::read_optional(j, "noise", t.noise, ctx);
}

}  // namespace gssl
