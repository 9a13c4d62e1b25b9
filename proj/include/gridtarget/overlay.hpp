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

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "gridtarget/geometry.hpp"
#include "gridtarget/image.hpp"

namespace gridtarget {

using Rgb = std::array<std::uint8_t, 3>;

struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;

  // Grayscale render of img, linearly stretched between its 1st and 99th
  // percentiles.
  static RgbImage from_gray(const GrayImage& img);

  void put(int x, int y, Rgb c);
  void line(Point2d a, Point2d b, Rgb c);
  void polygon(const std::vector<Point2d>& pts, Rgb c);
  void rect(const RotatedRect& r, Rgb c);
  void circle(Point2d center, double radius, Rgb c);
  void cross(Point2d center, int arm, Rgb c);
};

// Score ramp: dark blue, light blue, white, yellow, orange, red for scores
// running from 0 to 1.
Rgb score_color(double score);

std::vector<std::uint8_t> encode_png_rgb(const RgbImage& img);
void save_overlay(const RgbImage& img, const std::filesystem::path& path);

}  // namespace gridtarget
