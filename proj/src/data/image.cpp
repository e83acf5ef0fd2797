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


#include "gssl/data/image.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstring>
#include <fstream>
#include <iterator>

#include "gssl/errors.hpp"

namespace gssl {

GrayscaleImage::GrayscaleImage(std::size_t height, std::size_t width, double fill)
    : height_(height), width_(width), pixels_(height * width, fill) {
  if (height == 0 || width == 0) throw ValidationError("image dimensions must be at least 1x1");
}

GrayscaleImage::GrayscaleImage(std::size_t height, std::size_t width, std::vector<double> pixels)
    : height_(height), width_(width), pixels_(std::move(pixels)) {
  if (height == 0 || width == 0) throw ValidationError("image dimensions must be at least 1x1");
  if (pixels_.size() != height * width) throw ValidationError("pixel count does not match image dimensions");
}

void GrayscaleImage::validate() const {
  for (double v : pixels_)
    if (!(v >= 0.0 && v <= 1.0)) throw ValidationError("image intensity outside [0, 1]");
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DecodeError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed for " + path.string());
}

// --- PGM ----------------------------------------------------------------------

namespace {

class PgmReader {
 public:
  explicit PgmReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  unsigned long next_number(const char* what) {
    skip_space_and_comments();
    if (pos_ >= bytes_.size()) throw DecodeError(std::string("truncated PGM: missing ") + what);
    if (!std::isdigit(bytes_[pos_])) throw DecodeError(std::string("malformed PGM: bad ") + what);
    unsigned long v = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      v = v * 10 + (bytes_[pos_++] - '0');
      if (v > 0xffffffffUL) throw DecodeError(std::string("malformed PGM: ") + what + " too large");
    }
    return v;
  }

  std::size_t pos() const { return pos_; }
  void advance(std::size_t n) { pos_ += n; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 2;
};

GrayscaleImage decode_pgm(std::span<const std::uint8_t> bytes) {
  const bool ascii = bytes[1] == '2';
  PgmReader rd(bytes);
  const auto width = rd.next_number("width");
  const auto height = rd.next_number("height");
  const auto maxval = rd.next_number("maxval");
  if (width == 0 || height == 0) throw DecodeError("PGM dimensions must be positive");
  if (maxval == 0 || maxval > 65535) throw DecodeError("PGM maxval must be in 1..65535");
  const std::size_t n = width * height;
  std::vector<double> px(n);
  const double scale = static_cast<double>(maxval);
  if (ascii) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto v = rd.next_number("pixel value");
      if (v > maxval) throw DecodeError("PGM pixel value exceeds maxval");
      px[i] = static_cast<double>(v) / scale;
    }
  } else {
    rd.advance(1);  // single whitespace after maxval
    const std::size_t bpp = maxval < 256 ? 1 : 2;
    if (rd.pos() + n * bpp > bytes.size())
      throw DecodeError("truncated PGM: expected " + std::to_string(n) + " pixels");
    const std::uint8_t* p = bytes.data() + rd.pos();
    for (std::size_t i = 0; i < n; ++i) {
      const unsigned v = bpp == 1 ? p[i] : (unsigned(p[2 * i]) << 8) | p[2 * i + 1];
      if (v > maxval) throw DecodeError("PGM pixel value exceeds maxval");
      px[i] = static_cast<double>(v) / scale;
    }
  }
  return GrayscaleImage(height, width, std::move(px));
}

// --- PNG ----------------------------------------------------------------------

struct PngSource {
  std::span<const std::uint8_t> bytes;
  std::size_t pos = 0;
};

struct PngErrorState {
  std::jmp_buf jump;
  char message[256] = {};
};

void png_error_handler(png_structp png, png_const_charp msg) {
  auto* state = static_cast<PngErrorState*>(png_get_error_ptr(png));
  std::strncpy(state->message, msg, sizeof(state->message) - 1);
  std::longjmp(state->jump, 1);
}

void png_warning_handler(png_structp, png_const_charp) {}

void png_read_from_span(png_structp png, png_bytep out, png_size_t len) {
  auto* src = static_cast<PngSource*>(png_get_io_ptr(png));
  if (src->pos + len > src->bytes.size()) png_error(png, "truncated PNG data");
  std::memcpy(out, src->bytes.data() + src->pos, len);
  src->pos += len;
}

const char* color_type_name(int ct) {
  switch (ct) {
    case PNG_COLOR_TYPE_RGB: return "RGB";
    case PNG_COLOR_TYPE_RGB_ALPHA: return "RGBA";
    case PNG_COLOR_TYPE_GRAY_ALPHA: return "gray+alpha";
    case PNG_COLOR_TYPE_PALETTE: return "palette";
    default: return "unknown";
  }
}

GrayscaleImage decode_png(std::span<const std::uint8_t> bytes) {
  PngErrorState err;
  PngSource src{bytes, 0};
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, png_error_handler, png_warning_handler);
  if (!png) throw DecodeError("libpng initialization failed");
  png_infop info = png_create_info_struct(png);
  std::vector<std::uint8_t> raw;
  std::vector<png_bytep> rows;
  std::string failure;
  png_uint_32 width = 0, height = 0;
  int bit_depth = 0;

  // Nothing with a non-trivial destructor is created between setjmp and the
  // last libpng call; all buffers above outlive the jump.
  if (setjmp(err.jump)) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DecodeError(std::string("corrupt or truncated PNG: ") + err.message);
  }
  png_set_read_fn(png, &src, png_read_from_span);
  png_read_info(png, info);
  width = png_get_image_width(png, info);
  height = png_get_image_height(png, info);
  bit_depth = png_get_bit_depth(png, info);
  const int color_type = png_get_color_type(png, info);
  if (color_type != PNG_COLOR_TYPE_GRAY) {
    failure = std::string("multi-channel PNG (color type ") + color_type_name(color_type) + ") is not supported";
  } else if (bit_depth != 8 && bit_depth != 16) {
    failure = "unsupported PNG bit depth " + std::to_string(bit_depth) + " (need 8 or 16)";
  } else {
    const std::size_t stride = static_cast<std::size_t>(width) * (bit_depth / 8);
    raw.resize(stride * height);
    rows.resize(height);
    for (png_uint_32 r = 0; r < height; ++r) rows[r] = raw.data() + r * stride;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
  }
  png_destroy_read_struct(&png, &info, nullptr);
  if (!failure.empty()) throw DecodeError(failure);

  std::vector<double> px(static_cast<std::size_t>(width) * height);
  if (bit_depth == 8) {
    for (std::size_t i = 0; i < px.size(); ++i) px[i] = raw[i] / 255.0;
  } else {
    for (std::size_t i = 0; i < px.size(); ++i) px[i] = ((unsigned(raw[2 * i]) << 8) | raw[2 * i + 1]) / 65535.0;
  }
  return GrayscaleImage(height, width, std::move(px));
}

void png_write_to_vector(png_structp png, png_bytep data, png_size_t len) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + len);
}

void png_flush_noop(png_structp) {}

}  // namespace

GrayscaleImage decode_image(std::span<const std::uint8_t> bytes) {
  static constexpr std::uint8_t png_sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (bytes.size() >= 8 && std::memcmp(bytes.data(), png_sig, 8) == 0) return decode_png(bytes);
  if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '2' || bytes[1] == '5')) return decode_pgm(bytes);
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] >= '1' && bytes[1] <= '6')
    throw DecodeError(std::string("unsupported format: netpbm variant P") + char(bytes[1]) + " (need P2 or P5)");
  throw DecodeError("unsupported format: not a PGM or PNG file");
}

GrayscaleImage load_image(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  try {
    return decode_image(bytes);
  } catch (const DecodeError& e) {
    throw DecodeError(path.string() + ": " + e.what());
  }
}

std::vector<std::uint8_t> encode_pgm(const GrayscaleImage& img) {
  const std::string header =
      "P5\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + img.pixels().size());
  for (double v : img.pixels()) out.push_back(static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)));
  return out;
}

void write_pgm(const std::filesystem::path& path, const GrayscaleImage& img) { write_file_bytes(path, encode_pgm(img)); }

std::vector<std::uint8_t> encode_png(const GrayscaleImage& img, int bit_depth) {
  if (bit_depth != 8 && bit_depth != 16) throw ParameterError("PNG bit depth must be 8 or 16");
  const std::size_t w = img.width(), h = img.height(), bpp = bit_depth / 8;
  const double maxv = bit_depth == 8 ? 255.0 : 65535.0;
  std::vector<std::uint8_t> raw(w * h * bpp);
  for (std::size_t i = 0; i < w * h; ++i) {
    const auto q = static_cast<unsigned>(std::lround(std::clamp(img.pixels()[i], 0.0, 1.0) * maxv));
    if (bpp == 1) {
      raw[i] = static_cast<std::uint8_t>(q);
    } else {
      raw[2 * i] = static_cast<std::uint8_t>(q >> 8);
      raw[2 * i + 1] = static_cast<std::uint8_t>(q & 0xff);
    }
  }
  std::vector<png_bytep> rows(h);
  for (std::size_t r = 0; r < h; ++r) rows[r] = raw.data() + r * w * bpp;

  std::vector<std::uint8_t> out;
  PngErrorState err;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, png_error_handler, png_warning_handler);
  png_infop info = png_create_info_struct(png);
  if (setjmp(err.jump)) {
    png_destroy_write_struct(&png, &info);
    throw Error(std::string("PNG encoding failed: ") + err.message);
  }
  png_set_write_fn(png, &out, png_write_to_vector, png_flush_noop);
  png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), bit_depth, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

void write_png(const std::filesystem::path& path, const GrayscaleImage& img, int bit_depth) {
  write_file_bytes(path, encode_png(img, bit_depth));
}

}  // namespace gssl
