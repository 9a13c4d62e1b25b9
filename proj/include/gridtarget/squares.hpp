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

#include <optional>
#include <string>
#include <vector>

#include "gridtarget/geometry.hpp"
#include "gridtarget/image.hpp"
#include "gridtarget/segment.hpp"

namespace gridtarget {

// One shared grid angle for a low-mag image and the rectangles it induces.
struct AngleSolution {
  double theta = 0.0;  // degrees in [0, 90)
  double total_area = 0.0;
  std::vector<RotatedRect> rects;
};

struct SquareCrop {
  GrayImage pixels;
  RotatedRect source_rect;
  std::string image_id;
  std::optional<bool> label;
};

// Monotone-chain hull of the pixel centres. Collinear or single-pixel
// components are widened by 0.5 px on each side of their line.
ConvexPolygon convex_hull(const PixelComponent& c);
ConvexPolygon convex_hull(std::vector<Point2d> points);

// Smallest rectangle aligned at theta (degrees) that contains the polygon.
// The returned theta is reduced into [0, 90), swapping width and height when
// an odd number of quarter turns is removed.
RotatedRect min_rect_at_angle(const ConvexPolygon& p, double theta);

// Sum of min_rect_at_angle areas over all polygons.
double total_rect_area(const std::vector<ConvexPolygon>& polys, double theta);

// 1 degree scan over [0, 90) followed by Brent refinement within one degree
// of the best sample. Never returns worse than the best scanned sample.
AngleSolution optimize_grid_angle(const std::vector<ConvexPolygon>& polys);

// Inverse-rotation bilinear resampling of the rectangle. Samples that fall
// outside the image take the image mean. Output is round(w) x round(h).
// theta is used as given, so quarter-turned rectangles crop rotated content.
SquareCrop crop_square(const GrayImage& img, const RotatedRect& r);

struct SquareDetectionOptions {
  EmOptions em;
  Connectivity connectivity = Connectivity::kFour;
  // 0 selects default_min_component_size for the image.
  std::size_t min_component_size = 0;
};

struct SquareDetection {
  PoissonMixture mixture;
  std::vector<PixelComponent> components;
  std::vector<ConvexPolygon> polygons;
  AngleSolution solution;
};

// Full low-mag localization: mixture fit, pixel classes, components, hulls,
// shared grid angle. An image without any component yields an empty solution.
SquareDetection detect_squares(const GrayImage& img, const SquareDetectionOptions& opts = {});

}  // namespace gridtarget
