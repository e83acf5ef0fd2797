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

#include <algorithm>
#include <cmath>
#include <map>

#include "gssl/augment/guided_crop.hpp"
#include "gssl/data/phantom.hpp"
#include "gssl/errors.hpp"

using namespace gssl;
using namespace gssl::augment;

TEST(ContentMask, StrictThreshold) {
  GrayscaleImage img(10, 10, 0.0);
  img.at(5, 7) = 1.0;
  auto m = compute_content_mask(img, 0.05);
  for (std::size_t r = 0; r < 10; ++r)
    for (std::size_t c = 0; c < 10; ++c) EXPECT_EQ(m.at(r, c), r == 5 && c == 7);

  auto boundary = compute_content_mask(GrayscaleImage(4, 4, 0.05), 0.05);
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t c = 0; c < 4; ++c) EXPECT_FALSE(boundary.at(r, c));

  auto zeros = compute_content_mask(GrayscaleImage(4, 4, 0.0), 0.0);
  EXPECT_FALSE(content_bounding_box(zeros).has_value());

  EXPECT_THROW(compute_content_mask(img, 1.0), ParameterError);
  EXPECT_THROW(compute_content_mask(img, -0.1), ParameterError);
}

TEST(ContentBoundingBox, Examples) {
  ContentMask m(10, 10);
  m.set(5, 7, true);
  EXPECT_EQ(content_bounding_box(m), (BoundingBox{7, 5, 7, 5}));

  ContentMask full(32, 32);
  for (std::size_t r = 0; r < 32; ++r)
    for (std::size_t c = 0; c < 32; ++c) full.set(r, c, true);
  EXPECT_EQ(content_bounding_box(full), (BoundingBox{0, 0, 31, 31}));

  ContentMask two(12, 12);
  two.set(2, 3, true);
  two.set(9, 4, true);
  EXPECT_EQ(content_bounding_box(two), (BoundingBox{3, 2, 4, 9}));
}

TEST(ContentBoundingBox, TightOnRandomSparseMasks) {
  Rng rng(11);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto H = static_cast<std::size_t>(rng.uniform_int(1, 40));
    const auto W = static_cast<std::size_t>(rng.uniform_int(1, 40));
    const double density = rng.uniform(0.0, 0.05);
    ContentMask m(H, W);
    std::optional<BoundingBox> expect;
    for (std::size_t r = 0; r < H; ++r)
      for (std::size_t c = 0; c < W; ++c)
        if (rng.bernoulli(density)) {
          m.set(r, c, true);
          if (!expect) expect = BoundingBox{c, r, c, r};
          expect->x_min = std::min(expect->x_min, c);
          expect->x_max = std::max(expect->x_max, c);
          expect->y_min = std::min(expect->y_min, r);
          expect->y_max = std::max(expect->y_max, r);
        }
    ASSERT_EQ(content_bounding_box(m), expect) << "trial " << trial;
  }
}

TEST(PadAndClip, Examples) {
  EXPECT_EQ(pad_and_clip({10, 10, 20, 20}, 0.0, 64, 64), (BoundingBox{10, 10, 20, 20}));
  EXPECT_EQ(pad_and_clip({0, 0, 31, 31}, 0.3, 32, 32), (BoundingBox{0, 0, 31, 31}));
  EXPECT_EQ(pad_and_clip({10, 10, 20, 20}, 0.1, 64, 64), (BoundingBox{9, 9, 21, 21}));
  // anisotropic box pads each axis by its own length
  EXPECT_EQ(pad_and_clip({10, 20, 29, 23}, 0.1, 64, 64), (BoundingBox{8, 20, 31, 23}));
}

TEST(SampleCrop, FullRegionUnitScaleIsForced) {
  Rng rng(1);
  auto c = sample_crop(rng, BoundingBox::full(32, 32), 32, 32, {1, 1}, {1, 1});
  EXPECT_EQ(c, (CropSample{0, 0, 32, 32, false}));
}

TEST(SampleCrop, StartsCoverRegionUniformRange) {
  Rng rng(2);
  const BoundingBox region{8, 8, 23, 23};
  // area fraction 256/4096 with unit aspect gives a 16x16 crop
  std::size_t imin = 99, imax = 0, jmin = 99, jmax = 0;
  for (int n = 0; n < 10000; ++n) {
    auto c = sample_crop(rng, region, 64, 64, {0.0625, 0.0625}, {1, 1});
    ASSERT_EQ(c.h, 16u);
    ASSERT_EQ(c.w, 16u);
    imin = std::min(imin, c.i), imax = std::max(imax, c.i);
    jmin = std::min(jmin, c.j), jmax = std::max(jmax, c.j);
  }
  EXPECT_EQ(imin, 8u);
  EXPECT_EQ(imax, 23u);
  EXPECT_EQ(jmin, 8u);
  EXPECT_EQ(jmax, 23u);
}

TEST(SampleCrop, DegenerateRegionFallback) {
  Rng rng(3);
  auto c = sample_crop(rng, {0, 0, 0, 0}, 32, 32, {1, 1}, {1, 1});
  EXPECT_EQ(c.i, 0u);
  EXPECT_EQ(c.j, 0u);
  EXPECT_EQ(c.h, 32u);
  EXPECT_EQ(c.w, 32u);

  // no full-size crop can start at (31, 31): the fallback anchors there
  auto f = sample_crop(rng, {31, 31, 31, 31}, 32, 32, {1, 1}, {1, 1});
  EXPECT_EQ(f, (CropSample{31, 31, 1, 1, true}));
}

TEST(SampleCrop, ChiSquaredUniformOverValidStarts) {
  // 16x16 crops in a 64x64 image, region (8..23) => 256 valid starts.
  // Critical value of chi^2 with 255 dof at significance 0.01 is 310.457.
  for (std::uint64_t seed : {5ULL, 6ULL, 7ULL}) {
    Rng rng(seed);
    std::map<std::pair<std::size_t, std::size_t>, int> counts;
    const int n = 25600;
    for (int k = 0; k < n; ++k) {
      auto c = sample_crop(rng, {8, 8, 23, 23}, 64, 64, {0.0625, 0.0625}, {1, 1});
      ++counts[{c.i, c.j}];
    }
    ASSERT_EQ(counts.size(), 256u);
    const double expected = n / 256.0;
    double chi2 = 0.0;
    for (const auto& [_, k] : counts) chi2 += (k - expected) * (k - expected) / expected;
    EXPECT_LT(chi2, 310.457) << "seed " << seed;
  }
}

TEST(SampleCrop, RespectsScaleAndAspect) {
  Rng rng(9);
  const double area = 64.0 * 64.0;
  for (int n = 0; n < 5000; ++n) {
    auto c = sample_crop(rng, BoundingBox::full(64, 64), 64, 64, {0.05, 0.32}, {0.75, 4.0 / 3.0});
    ASSERT_FALSE(c.fallback);
    // one pixel of rounding per side
    EXPECT_GE((c.h + 1.0) * (c.w + 1.0), 0.05 * area);
    EXPECT_LE((c.h - 1.0) * (c.w - 1.0), 0.32 * area);
    const double ratio = static_cast<double>(c.w) / static_cast<double>(c.h);
    EXPECT_GE(ratio, 0.75 * (c.w - 0.5) / (c.w + 0.5) * (c.h - 0.5) / (c.h + 0.5));
    EXPECT_LE(ratio, 4.0 / 3.0 * (c.w + 0.5) / (c.w - 0.5) * (c.h + 0.5) / (c.h - 0.5));
  }
}

TEST(ResizeBilinear, Examples) {
  GrayscaleImage img(4, 4);
  for (std::size_t i = 0; i < 16; ++i) img.pixels()[i] = i / 16.0;
  auto same = resize_bilinear(img, {1, 1, 2, 3, false}, 2, 3);
  for (std::size_t r = 0; r < 2; ++r)
    for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(same.at(r, c), img.at(r + 1, c + 1));

  auto constant = resize_bilinear(GrayscaleImage(5, 5, 0.3), {0, 0, 5, 5, false}, 7, 3);
  for (double v : constant.pixels()) EXPECT_EQ(v, 0.3);

  GrayscaleImage stripes(2, 2, std::vector<double>{0, 1, 0, 1});
  EXPECT_DOUBLE_EQ(resize_bilinear(stripes, {0, 0, 2, 2, false}, 1, 1).at(0, 0), 0.5);

  EXPECT_THROW(resize_bilinear(img, {3, 3, 2, 2, false}, 2, 2), ValidationError);
}

TEST(MultiCrop, DefaultConfigCountsAndSizes) {
  MultiCropConfig cfg;
  PhantomTemplate t;
  Rng spec_rng(1);
  auto ph = generate_phantom(sample_phantom_spec(t, spec_rng), 1);
  Rng rng(4);
  auto views = multi_crop(ph.image, cfg, rng);
  ASSERT_EQ(views.global_views.size(), 2u);
  ASSERT_EQ(views.local_views.size(), 8u);
  for (const auto& v : views.global_views) {
    EXPECT_EQ(v.height(), 32u);
    EXPECT_EQ(v.width(), 32u);
  }
  for (const auto& v : views.local_views) {
    EXPECT_EQ(v.height(), 16u);
    EXPECT_EQ(v.width(), 16u);
  }
  ASSERT_TRUE(views.content_box.has_value());
  EXPECT_TRUE(views.sampling_region.contains(*views.content_box));
}

TEST(MultiCrop, EmptyMaskFallsBackToFullImage) {
  MultiCropConfig cfg;
  Rng rng(5);
  auto views = multi_crop(GrayscaleImage(40, 40, 0.0), cfg, rng);
  EXPECT_FALSE(views.content_box.has_value());
  EXPECT_EQ(views.sampling_region, BoundingBox::full(40, 40));
  EXPECT_EQ(views.global_views.size() + views.local_views.size(), 10u);
}

TEST(MultiCrop, ContainmentOnPhantoms) {
  MultiCropConfig cfg;
  PhantomTemplate t;
  for (std::uint64_t k = 0; k < 1000; ++k) {
    Rng spec_rng(k);
    auto ph = generate_phantom(sample_phantom_spec(t, spec_rng), k);
    Rng rng(derive_seed({k, 1}));
    auto views = multi_crop(ph.image, cfg, rng);
    // the phantom's own >0 box contains the >theta box, so B' never leaves its padding
    const auto region = pad_and_clip(ph.box, cfg.pad_frac, 64, 64);
    for (const auto* crops : {&views.global_crops, &views.local_crops}) {
      for (const auto& c : *crops) {
        ASSERT_TRUE(views.sampling_region.contains(c.i, c.j));
        ASSERT_TRUE(region.contains(c.i, c.j));
        ASSERT_LE(c.i + c.h, 64u);
        ASSERT_LE(c.j + c.w, 64u);
      }
    }
  }
}

TEST(MultiCrop, DeterministicGivenSeed) {
  MultiCropConfig cfg;
  PhantomTemplate t;
  Rng spec_rng(3);
  auto ph = generate_phantom(sample_phantom_spec(t, spec_rng), 3);
  Rng a(77), b(77);
  EXPECT_EQ(multi_crop(ph.image, cfg, a), multi_crop(ph.image, cfg, b));
}

TEST(MultiCrop, ConfigValidationNamesKey) {
  MultiCropConfig cfg;
  cfg.local.scale = {0.5, 0.2};
  try {
    cfg.validate();
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "local.scale");
  }
  nlohmann::json j = MultiCropConfig{};
  EXPECT_NO_THROW(j.get<MultiCropConfig>().validate());
  j["blur"] = 1;
  EXPECT_THROW(j.get<MultiCropConfig>(), ConfigError);
}

TEST(ContentView, CropsToContentBox) {
  GrayscaleImage img(20, 20, 0.0);
  for (std::size_t r = 5; r < 15; ++r)
    for (std::size_t c = 5; c < 15; ++c) img.at(r, c) = 0.7;
  auto v = content_view(img, 0.02, 10);
  for (double p : v.pixels()) EXPECT_EQ(p, 0.7);
}

TEST(CompareGuidance, FullContentGivesEqualOverlap) {
  GrayscaleImage img(32, 32);
  for (auto& p : img.pixels()) p = 0.5;
  MultiCropConfig cfg;
  auto r = compare_guidance(img, cfg, cfg.global, 200, 1);
  EXPECT_DOUBLE_EQ(r.guided, 1.0);
  EXPECT_DOUBLE_EQ(r.unguided, 1.0);
  EXPECT_DOUBLE_EQ(r.content_fraction, 1.0);
  EXPECT_EQ(r.guided_fallbacks, 0u);
}

TEST(CompareGuidance, OverlapMatchesPixelCount) {
  // content square in one corner; brute-force the statistic for a few crops
  GrayscaleImage img(40, 40);
  for (std::size_t r = 0; r < 12; ++r)
    for (std::size_t c = 0; c < 12; ++c) img.at(r, c) = 0.9;
  MultiCropConfig cfg;
  const std::size_t n = 50;
  auto r = compare_guidance(img, cfg, cfg.local, n, 3);
  EXPECT_NEAR(r.content_fraction, 144.0 / 1600.0, 1e-15);

  const BoundingBox region = pad_and_clip(BoundingBox{0, 0, 11, 11}, cfg.pad_frac, 40, 40);
  const BoundingBox whole{0, 0, 39, 39};
  double g = 0, u = 0;
  for (std::size_t k = 0; k < n; ++k) {
    Rng a(derive_seed({3, k})), b(derive_seed({3, k}));
    for (auto [rng, reg, acc] : {std::tuple{&a, region, &g}, std::tuple{&b, whole, &u}}) {
      const auto c = sample_crop(*rng, reg, 40, 40, cfg.local.scale, cfg.aspect, cfg.max_attempts);
      std::size_t hits = 0;
      for (std::size_t y = c.i; y < c.i + c.h; ++y)
        for (std::size_t x = c.j; x < c.j + c.w; ++x) hits += img.at(y, x) > cfg.theta ? 1 : 0;
      *acc += static_cast<double>(hits) / static_cast<double>(c.h * c.w);
    }
  }
  EXPECT_NEAR(r.guided, g / n, 1e-12);
  EXPECT_NEAR(r.unguided, u / n, 1e-12);
  EXPECT_GT(r.guided, r.unguided);
}
