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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace gssl {

/// H x W single-channel intensities in [0, 1], row-major.
class GrayscaleImage {
 public:
  GrayscaleImage() = default;
  GrayscaleImage(std::size_t height, std::size_t width, double fill = 0.0);
  GrayscaleImage(std::size_t height, std::size_t width, std::vector<double> pixels);

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  double& at(std::size_t row, std::size_t col) noexcept { return pixels_[row * width_ + col]; }
  double at(std::size_t row, std::size_t col) const noexcept { return pixels_[row * width_ + col]; }
  std::span<const double> pixels() const noexcept { return pixels_; }
  std::span<double> pixels() noexcept { return pixels_; }

  /// Throws ValidationError unless every intensity lies in [0, 1].
  void validate() const;

  bool operator==(const GrayscaleImage&) const = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<double> pixels_;
};

/// Decodes PGM (P2/P5) or 8/16-bit grayscale PNG. Intensities are divided by
/// the format's maximum value, never rescaled per image.
GrayscaleImage load_image(const std::filesystem::path& path);
GrayscaleImage decode_image(std::span<const std::uint8_t> bytes);

/// Binary PGM (P5, maxval 255) with round-to-nearest quantization.
std::vector<std::uint8_t> encode_pgm(const GrayscaleImage& img);
void write_pgm(const std::filesystem::path& path, const GrayscaleImage& img);

/// Grayscale PNG at 8 or 16 bits per sample.
std::vector<std::uint8_t> encode_png(const GrayscaleImage& img, int bit_depth);
void write_png(const std::filesystem::path& path, const GrayscaleImage& img, int bit_depth);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace gssl
