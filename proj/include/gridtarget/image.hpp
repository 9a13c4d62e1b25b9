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

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gridtarget {

struct ImageMeta {
  // Angstrom per pixel, from the MRC cell/sampling header. 0 when unknown.
  double pixel_size = 0.0;
  // Number of negative samples clamped to zero while loading.
  std::size_t clamped_negatives = 0;
};

// Row-major grayscale image with non-negative intensities.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<double> data;
  std::string id;
  ImageMeta meta;

  GrayImage() = default;
  GrayImage(int w, int h, double fill = 0.0);

  std::size_t size() const { return data.size(); }
  double& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
  double at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }
};

// Per-pixel probability in [0, 1], same shape as the image it was derived from.
struct ProbabilityMap {
  int width = 0;
  int height = 0;
  std::vector<double> data;

  ProbabilityMap() = default;
  ProbabilityMap(int w, int h, double fill = 0.0);

  std::size_t size() const { return data.size(); }
  double& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
  double at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }

  // Throws CorruptionError if any value is outside [0, 1] or non-finite.
  void validate() const;
};

// One boolean per pixel; true marks foreground.
struct PixelMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;

  PixelMask() = default;
  PixelMask(int w, int h, bool fill = false);

  bool at(int x, int y) const { return bits[static_cast<std::size_t>(y) * width + x] != 0; }
  void set(int x, int y, bool v) { bits[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0; }
  std::size_t count() const;
};

struct SmoothingParam {
  double sigma = 1.0;
};

enum class ImageFormat { kMrc, kPgm, kPng };

enum class MrcMode : std::int32_t {
  kInt8 = 0,
  kInt16 = 1,
  kFloat32 = 2,
  kUint16 = 6,
};

// Sniffs the format from magic bytes: PNG signature, "P5", or the MRC2014
// "MAP " stamp at byte 208.
ImageFormat detect_format(std::span<const std::uint8_t> head);

GrayImage load_image(const std::filesystem::path& path);
GrayImage decode_image(std::span<const std::uint8_t> bytes, const std::string& id = {});

// Integer formats require integral intensities within the target range;
// out-of-range values raise ArgumentError rather than silently saturating.
std::vector<std::uint8_t> encode_mrc(const GrayImage& img, MrcMode mode = MrcMode::kFloat32);
std::vector<std::uint8_t> encode_pgm(const GrayImage& img);
std::vector<std::uint8_t> encode_png(const GrayImage& img);

void save_mrc(const GrayImage& img, const std::filesystem::path& path,
              MrcMode mode = MrcMode::kFloat32);
void save_pgm(const GrayImage& img, const std::filesystem::path& path);
void save_png(const GrayImage& img, const std::filesystem::path& path);
// Picks the encoder from the extension (.mrc, .pgm, .png).
void save_image(const GrayImage& img, const std::filesystem::path& path);

// PMAP: "PMAP", u16 version = 1, u32 width, u32 height, then width*height
// little-endian float32 values, row-major.
std::vector<std::uint8_t> encode_pmap(const ProbabilityMap& map);
ProbabilityMap decode_pmap(std::span<const std::uint8_t> bytes);
void save_pmap(const ProbabilityMap& map, const std::filesystem::path& path);
ProbabilityMap load_pmap(const std::filesystem::path& path);

// z-score over the mask (whole image when absent). A standard deviation
// below 1e-12 yields an all-zero image.
GrayImage normalize(const GrayImage& img, const PixelMask* mask = nullptr);

// Normalized discrete Gaussian of radius ceil(3 sigma), half-sample
// symmetric (reflect) padding. Exactly commutes with 90 degree rotation.
GrayImage gaussian_blur(const GrayImage& img, SmoothingParam s);
ProbabilityMap gaussian_blur(const ProbabilityMap& map, SmoothingParam s);
std::vector<double> gaussian_kernel(double sigma);

// Write to a sibling temp file and rename over the target.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_file_atomic(const std::filesystem::path& path, const std::string& text);
std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

}  // namespace gridtarget
