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

#include "gridtarget/squares.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gridtarget/brent.hpp"
#include "gridtarget/error.hpp"

namespace gridtarget {

namespace {

double reduce_quarter_turns(double theta, bool* odd) {
  const double turns = std::floor(theta / 90.0);
  double reduced = theta - 90.0 * turns;
  if (reduced >= 90.0) reduced -= 90.0;
  if (reduced < 0.0) reduced = 0.0;
  if (odd != nullptr) *odd = static_cast<long long>(turns) % 2 != 0;
  return reduced;
}

// Widen a degenerate (point or segment) hull into a thin rectangle.
ConvexPolygon widen(Point2d p, Point2d q) {
  if (p == q) {
    return {{{p.x - 0.5, p.y - 0.5}, {p.x + 0.5, p.y - 0.5}, {p.x + 0.5, p.y + 0.5}, {p.x - 0.5, p.y + 0.5}}};
  }
  const Point2d dir = q - p;
  const Point2d n = (0.5 / norm(dir)) * perp(dir);
  return {{p - n, q - n, q + n, p + n}};
}

}  // namespace

ConvexPolygon convex_hull(std::vector<Point2d> pts) {
  if (pts.empty()) throw ArgumentError("convex hull of an empty point set");
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() == 1) return widen(pts[0], pts[0]);

  std::vector<Point2d> hull(2 * pts.size());
  std::size_t k = 0;
  for (const Point2d& p : pts) {
    while (k >= 2 && cross(hull[k - 1] - hull[k - 2], p - hull[k - 2]) <= 0.0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && cross(hull[k - 1] - hull[k - 2], pts[i] - hull[k - 2]) <= 0.0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  if (hull.size() < 3) return widen(pts.front(), pts.back());
  return {std::move(hull)};
}

ConvexPolygon convex_hull(const PixelComponent& c) {
  if (c.pixels.empty()) throw ArgumentError("convex hull of an empty component");
  std::vector<Point2d> pts;
  pts.reserve(c.pixels.size());
  for (const auto& p : c.pixels) pts.push_back({static_cast<double>(p.x), static_cast<double>(p.y)});
  return convex_hull(std::move(pts));
}

RotatedRect min_rect_at_angle(const ConvexPolygon& p, double theta) {
  const double c = std::cos(deg2rad(theta));
  const double s = std::sin(deg2rad(theta));
  double umin = std::numeric_limits<double>::infinity(), umax = -umin;
  double vmin = umin, vmax = -umin;
  for (const Point2d& q : p.vertices) {
    const double u = q.x * c + q.y * s;
    const double v = -q.x * s + q.y * c;
    umin = std::min(umin, u);
    umax = std::max(umax, u);
    vmin = std::min(vmin, v);
    vmax = std::max(vmax, v);
  }
  const double um = 0.5 * (umin + umax), vm = 0.5 * (vmin + vmax);
  RotatedRect r;
  r.center = {um * c - vm * s, um * s + vm * c};
  r.width = umax - umin;
  r.height = vmax - vmin;
  bool odd = false;
  r.theta = reduce_quarter_turns(theta, &odd);
  if (odd) std::swap(r.width, r.height);
  return r;
}

double total_rect_area(const std::vector<ConvexPolygon>& polys, double theta) {
  double total = 0.0;
  for (const auto& p : polys) total += min_rect_at_angle(p, theta).area();
  return total;
}

AngleSolution optimize_grid_angle(const std::vector<ConvexPolygon>& polys) {
  if (polys.empty()) throw ArgumentError("grid angle needs at least one polygon");
  auto objective = [&](double theta) { return total_rect_area(polys, theta); };

  double best_theta = 0.0;
  double best_area = std::numeric_limits<double>::infinity();
  for (int deg = 0; deg < 90; ++deg) {
    const double a = objective(deg);
    if (a < best_area) {
      best_area = a;
      best_theta = deg;
    }
  }
  const ScalarMinimum refined = minimize_bounded(objective, best_theta - 1.0, best_theta + 1.0, 1e-7);
  if (refined.fx < best_area) best_theta = refined.x;

  AngleSolution sol;
  sol.theta = reduce_quarter_turns(best_theta, nullptr);
  sol.rects.reserve(polys.size());
  for (const auto& p : polys) {
    sol.rects.push_back(min_rect_at_angle(p, sol.theta));
    sol.total_area += sol.rects.back().area();
  }
  return sol;
}

SquareCrop crop_square(const GrayImage& img, const RotatedRect& r) {
  const int w = static_cast<int>(std::lround(r.width));
  const int h = static_cast<int>(std::lround(r.height));
  if (w < 1 || h < 1) throw ArgumentError("crop rectangle has zero area");
  if (img.width == 0 || img.height == 0) throw ArgumentError("crop from an empty image");

  const Point2d u = r.axis_u(), v = r.axis_v();
  constexpr double kEdge = 1e-9;
  const double xmax = img.width - 1, ymax = img.height - 1;
  double mean = std::numeric_limits<double>::quiet_NaN();
  auto image_mean = [&]() {
    if (std::isnan(mean)) {
      double s = 0.0;
      for (double x : img.data) s += x;
      mean = s / static_cast<double>(img.data.size());
    }
    return mean;
  };

  SquareCrop crop;
  crop.pixels = GrayImage(w, h);
  crop.pixels.id = img.id;
  crop.image_id = img.id;
  crop.source_rect = r;
  bool any_inside = false;
  for (int j = 0; j < h; ++j) {
    const double dv = j - 0.5 * (h - 1);
    for (int i = 0; i < w; ++i) {
      const double du = i - 0.5 * (w - 1);
      double px = r.center.x + du * u.x + dv * v.x;
      double py = r.center.y + du * u.y + dv * v.y;
      if (px < -kEdge || py < -kEdge || px > xmax + kEdge || py > ymax + kEdge) {
        crop.pixels.at(i, j) = image_mean();
        continue;
      }
      any_inside = true;
      px = std::clamp(px, 0.0, xmax);
      py = std::clamp(py, 0.0, ymax);
      const int x0 = static_cast<int>(std::floor(px));
      const int y0 = static_cast<int>(std::floor(py));
      const double fx = px - x0, fy = py - y0;
      const int x1 = fx > 0.0 ? x0 + 1 : x0;
      const int y1 = fy > 0.0 ? y0 + 1 : y0;
      const double top = fx > 0.0 ? (1.0 - fx) * img.at(x0, y0) + fx * img.at(x1, y0) : img.at(x0, y0);
      const double bottom = fx > 0.0 ? (1.0 - fx) * img.at(x0, y1) + fx * img.at(x1, y1) : img.at(x0, y1);
      crop.pixels.at(i, j) = fy > 0.0 ? (1.0 - fy) * top + fy * bottom : top;
    }
  }
  if (!any_inside) throw ArgumentError("crop rectangle does not overlap the image");
  return crop;
}

SquareDetection detect_squares(const GrayImage& img, const SquareDetectionOptions& opts) {
  SquareDetection det;
  det.mixture = fit_poisson_mixture(img, opts.em);
  const PixelMask mask = classify_pixels(img, det.mixture);
  const std::size_t min_size =
      opts.min_component_size > 0 ? opts.min_component_size : default_min_component_size(img.width, img.height);
  det.components = connected_components(mask, opts.connectivity, min_size);
  det.polygons.reserve(det.components.size());
  for (const auto& c : det.components) det.polygons.push_back(convex_hull(c));
  if (!det.polygons.empty()) det.solution = optimize_grid_angle(det.polygons);
  return det;
}

}  // namespace gridtarget
