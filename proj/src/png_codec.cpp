// Copyright 2026 The gridtarget Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <png.h>

#include <cmath>
#include <csetjmp>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "gridtarget/error.hpp"
#include "gridtarget/image.hpp"
#include "gridtarget/overlay.hpp"

namespace gridtarget {

namespace {

struct ReadCursor {
  std::span<const std::uint8_t> bytes;
  std::size_t pos = 0;
};

void read_callback(png_structp png, png_bytep out, png_size_t n) {
  auto* cur = static_cast<ReadCursor*>(png_get_io_ptr(png));
  if (cur->pos + n > cur->bytes.size()) png_error(png, "PNG payload truncated");
  std::memcpy(out, cur->bytes.data() + cur->pos, n);
  cur->pos += n;
}

void write_callback(png_structp png, png_bytep data, png_size_t n) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + n);
}

void flush_callback(png_structp) {}

[[noreturn]] void error_callback(png_structp png, png_const_charp msg) {
  auto* text = static_cast<std::string*>(png_get_error_ptr(png));
  *text = msg;
  png_longjmp(png, 1);
}

void warning_callback(png_structp, png_const_charp) {}

std::vector<std::uint8_t> encode_png_raw(int width, int height, int color_type, int bit_depth,
                                         std::span<const std::uint8_t> rows, std::size_t stride) {
  std::string err;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, error_callback, warning_callback);
  if (png == nullptr) throw Error("libpng: cannot create write struct");
  png_infop info = png_create_info_struct(png);
  std::vector<std::uint8_t> out;
  std::vector<png_bytep> row_ptrs(static_cast<std::size_t>(height));
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error("libpng: " + err);
  }
  png_set_write_fn(png, &out, write_callback, flush_callback);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), bit_depth,
               color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  for (int y = 0; y < height; ++y) {
    row_ptrs[y] = const_cast<png_bytep>(rows.data() + static_cast<std::size_t>(y) * stride);
  }
  png_set_rows(png, info, row_ptrs.data());
  png_write_png(png, info, PNG_TRANSFORM_IDENTITY, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

}  // namespace

GrayImage decode_png(std::span<const std::uint8_t> bytes) {
  std::string err;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, error_callback, warning_callback);
  if (png == nullptr) throw Error("libpng: cannot create read struct");
  png_infop info = png_create_info_struct(png);
  ReadCursor cursor{bytes, 0};
  // Everything touched between setjmp and a possible longjmp lives out here.
  volatile bool bad_color = false;
  std::vector<std::uint8_t> raster;
  std::vector<png_bytep> rows;
  png_uint_32 w = 0, h = 0;
  int depth = 0;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    if (bad_color) throw FormatError("only grayscale PNG images are supported");
    throw CorruptionError("PNG decode failed: " + err);
  }
  png_set_read_fn(png, &cursor, read_callback);
  png_read_info(png, info);
  w = png_get_image_width(png, info);
  h = png_get_image_height(png, info);
  depth = png_get_bit_depth(png, info);
  const int color = png_get_color_type(png, info);
  if (color != PNG_COLOR_TYPE_GRAY) {
    bad_color = true;
    png_error(png, "color type");
  }
  if (depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  png_read_update_info(png, info);
  const std::size_t stride = png_get_rowbytes(png, info);
  raster.resize(stride * h);
  rows.resize(h);
  for (png_uint_32 y = 0; y < h; ++y) rows[y] = raster.data() + y * stride;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  GrayImage img(static_cast<int>(w), static_cast<int>(h));
  const bool wide = depth == 16;
  for (png_uint_32 y = 0; y < h; ++y) {
    for (png_uint_32 x = 0; x < w; ++x) {
      const std::uint8_t* p = raster.data() + y * stride + (wide ? 2 * x : x);
      img.data[static_cast<std::size_t>(y) * w + x] = wide ? (p[0] << 8) | p[1] : p[0];
    }
  }
  return img;
}

std::vector<std::uint8_t> encode_png(const GrayImage& img) {
  double maxv = 0.0;
  for (double v : img.data) {
    if (!std::isfinite(v) || v < 0.0 || v > 65535.0 || std::floor(v) != v) {
      throw ArgumentError("PNG needs integral intensities in [0, 65535]");
    }
    maxv = std::max(maxv, v);
  }
  const bool wide = maxv > 255.0;
  const std::size_t stride = static_cast<std::size_t>(img.width) * (wide ? 2 : 1);
  std::vector<std::uint8_t> raster(stride * img.height);
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    const auto s = static_cast<std::uint16_t>(img.data[i]);
    if (wide) {
      raster[2 * i] = static_cast<std::uint8_t>(s >> 8);
      raster[2 * i + 1] = static_cast<std::uint8_t>(s & 0xff);
    } else {
      raster[i] = static_cast<std::uint8_t>(s);
    }
  }
  return encode_png_raw(img.width, img.height, PNG_COLOR_TYPE_GRAY, wide ? 16 : 8, raster, stride);
}

std::vector<std::uint8_t> encode_png_rgb(const RgbImage& img) {
  return encode_png_raw(img.width, img.height, PNG_COLOR_TYPE_RGB, 8, img.rgb,
                        static_cast<std::size_t>(img.width) * 3);
}

}  // namespace gridtarget
