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

#include "gridtarget/overlay.hpp"

#include <algorithm>
#include <cmath>

namespace gridtarget {

RgbImage RgbImage::from_gray(const GrayImage& img) {
  RgbImage out;
  out.width = img.width;
  out.height = img.height;
  out.rgb.resize(img.data.size() * 3);
  if (img.data.empty()) return out;
  std::vector<double> sorted = img.data;
  const auto pick = [&](double q) {
    auto it = sorted.begin() + static_cast<std::ptrdiff_t>(q * (sorted.size() - 1));
    std::nth_element(sorted.begin(), it, sorted.end());
    return *it;
  };
  const double lo = pick(0.01), hi = pick(0.99);
  const double scale = hi > lo ? 255.0 / (hi - lo) : 0.0;
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    const auto g = static_cast<std::uint8_t>(std::clamp((img.data[i] - lo) * scale, 0.0, 255.0));
    out.rgb[3 * i] = out.rgb[3 * i + 1] = out.rgb[3 * i + 2] = g;
  }
  return out;
}

void RgbImage::put(int x, int y, Rgb c) {
  if (x < 0 || y < 0 || x >= width || y >= height) return;
  const std::size_t i = (static_cast<std::size_t>(y) * width + x) * 3;
  rgb[i] = c[0];
  rgb[i + 1] = c[1];
  rgb[i + 2] = c[2];
}

void RgbImage::line(Point2d a, Point2d b, Rgb c) {
  const double len = distance(a, b);
  const int steps = std::max(1, static_cast<int>(std::ceil(len * 2.0)));
  for (int s = 0; s <= steps; ++s) {
    const double t = static_cast<double>(s) / steps;
    put(static_cast<int>(std::lround(a.x + t * (b.x - a.x))), static_cast<int>(std::lround(a.y + t * (b.y - a.y))), c);
  }
}

void RgbImage::polygon(const std::vector<Point2d>& pts, Rgb c) {
  for (std::size_t i = 0; i < pts.size(); ++i) line(pts[i], pts[(i + 1) % pts.size()], c);
}

void RgbImage::rect(const RotatedRect& r, Rgb c) { polygon(r.corners(), c); }

void RgbImage::circle(Point2d center, double radius, Rgb c) {
  const int steps = std::max(16, static_cast<int>(radius * 8.0));
  std::vector<Point2d> pts;
  pts.reserve(steps);
  for (int s = 0; s < steps; ++s) {
    const double a = 2.0 * std::numbers::pi * s / steps;
    pts.push_back({center.x + radius * std::cos(a), center.y + radius * std::sin(a)});
  }
  polygon(pts, c);
}

void RgbImage::cross(Point2d center, int arm, Rgb c) {
  line({center.x - arm, center.y}, {center.x + arm, center.y}, c);
  line({center.x, center.y - arm}, {center.x, center.y + arm}, c);
}

Rgb score_color(double score) {
  static constexpr Rgb kStops[] = {
      {0, 0, 139},      // dark blue
      {135, 206, 250},  // light blue
      {255, 255, 255},  // white
      {255, 255, 0},    // yellow
      {255, 165, 0},    // orange
      {255, 0, 0},      // red
  };
  constexpr int kLast = static_cast<int>(std::size(kStops)) - 1;
  const double t = std::clamp(std::isfinite(score) ? score : 0.0, 0.0, 1.0) * kLast;
  const int i = std::min(static_cast<int>(t), kLast - 1);
  const double f = t - i;
  Rgb out;
  for (int k = 0; k < 3; ++k) {
    out[k] = static_cast<std::uint8_t>(std::lround((1.0 - f) * kStops[i][k] + f * kStops[i + 1][k]));
  }
  return out;
}

void save_overlay(const RgbImage& img, const std::filesystem::path& path) {
  write_file_atomic(path, encode_png_rgb(img));
}

}  // namespace gridtarget
