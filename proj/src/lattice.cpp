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

#include "gridtarget/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <tuple>

#include "gridtarget/error.hpp"
#include "gridtarget/parallel.hpp"
#include "gridtarget/segment.hpp"

namespace gridtarget {

namespace {

bool within(Point2d p, int width, int height, double margin) {
  return p.x >= -0.5 - margin && p.x < width - 0.5 + margin && p.y >= -0.5 - margin &&
         p.y < height - 0.5 + margin;
}

}  // namespace

Lattice Lattice::from_anchors(Point2d a, Point2d b, int width, int height) {
  Lattice l;
  l.anchor_a = a;
  l.anchor_b = b;
  l.u = b - a;
  l.v = perp(l.u);
  l.spacing = norm(l.u);
  if (!(l.spacing > 0.0)) throw GeometryError("lattice anchors coincide");
  l.points = l.points_within(width, height, 0.0);
  return l;
}

std::vector<Point2d> Lattice::points_within(int width, int height, double margin) const {
  const double d2 = spacing * spacing;
  const double lo_x = -0.5 - margin, hi_x = width - 0.5 + margin;
  const double lo_y = -0.5 - margin, hi_y = height - 0.5 + margin;
  double imin = std::numeric_limits<double>::infinity(), imax = -imin, jmin = imin, jmax = -imin;
  for (const Point2d c : {Point2d{lo_x, lo_y}, Point2d{hi_x, lo_y}, Point2d{lo_x, hi_y}, Point2d{hi_x, hi_y}}) {
    const double i = dot(c - anchor_a, u) / d2;
    const double j = dot(c - anchor_a, v) / d2;
    imin = std::min(imin, i);
    imax = std::max(imax, i);
    jmin = std::min(jmin, j);
    jmax = std::max(jmax, j);
  }
  std::vector<Point2d> out;
  for (long j = static_cast<long>(std::floor(jmin)) - 1; j <= static_cast<long>(std::ceil(jmax)) + 1; ++j) {
    for (long i = static_cast<long>(std::floor(imin)) - 1; i <= static_cast<long>(std::ceil(imax)) + 1; ++i) {
      const Point2d p = anchor_a + static_cast<double>(i) * u + static_cast<double>(j) * v;
      if (within(p, width, height, margin)) out.push_back(p);
    }
  }
  return out;
}

std::vector<Centroid> extract_centroids(const ProbabilityMap& map, double threshold, std::size_t min_region) {
  PixelMask mask(map.width, map.height);
  for (std::size_t i = 0; i < map.data.size(); ++i) mask.bits[i] = map.data[i] > threshold ? 1 : 0;
  std::vector<Centroid> out;
  for (const auto& comp : connected_components(mask, Connectivity::kFour, std::max<std::size_t>(min_region, 1))) {
    double mass = 0.0, sx = 0.0, sy = 0.0;
    for (const auto& p : comp.pixels) {
      const double o = map.at(p.x, p.y);
      mass += o;
      sx += o * p.x;
      sy += o * p.y;
    }
    if (mass > 0.0) out.push_back({sx / mass, sy / mass, mass});
  }
  return out;
}

std::vector<AnchorPair> candidate_anchor_pairs(const std::vector<Centroid>& cents, std::size_t k) {
  if (cents.size() < 2) throw FitError("lattice fitting needs at least two centroids");
  std::set<std::pair<std::size_t, std::size_t>> unique;
  std::vector<std::pair<double, std::size_t>> dist;
  for (std::size_t i = 0; i < cents.size(); ++i) {
    dist.clear();
    for (std::size_t j = 0; j < cents.size(); ++j) {
      if (j == i) continue;
      dist.emplace_back(std::hypot(cents[i].x - cents[j].x, cents[i].y - cents[j].y), j);
    }
    const std::size_t take = std::min(k, dist.size());
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(take), dist.end());
    for (std::size_t t = 0; t < take; ++t) unique.insert(std::minmax(i, dist[t].second));
  }
  std::vector<AnchorPair> out;
  out.reserve(unique.size());
  for (const auto& [a, b] : unique) {
    out.push_back({a, b, {cents[a].x, cents[a].y}, {cents[b].x, cents[b].y}});
  }
  return out;
}

double default_render_radius(double spacing) { return std::max(3.0, std::round(spacing / 8.0)); }

ProbabilityMap render_lattice(const Lattice& l, int width, int height, double radius) {
  if (!(l.spacing > 0.0)) throw ArgumentError("lattice spacing must be positive");
  if (radius < 0.0) throw ArgumentError("render radius must be >= 0");
  ProbabilityMap out(width, height, 0.0);
  const double r2 = radius * radius;
  const int reach = static_cast<int>(std::ceil(radius));
  for (const Point2d p : l.points_within(width, height, 0.5 * l.spacing)) {
    const int nx = static_cast<int>(std::lround(p.x));
    const int ny = static_cast<int>(std::lround(p.y));
    if (nx >= 0 && ny >= 0 && nx < width && ny < height) out.at(nx, ny) = 1.0;
    const int x0 = std::max(0, static_cast<int>(std::floor(p.x)) - reach);
    const int x1 = std::min(width - 1, static_cast<int>(std::ceil(p.x)) + reach);
    const int y0 = std::max(0, static_cast<int>(std::floor(p.y)) - reach);
    const int y1 = std::min(height - 1, static_cast<int>(std::ceil(p.y)) + reach);
    for (int y = y0; y <= y1; ++y) {
      const double dy = y - p.y;
      for (int x = x0; x <= x1; ++x) {
        const double dx = x - p.x;
        if (dx * dx + dy * dy <= r2) out.at(x, y) = 1.0;
      }
    }
  }
  return out;
}

double lattice_cost(const ProbabilityMap& o, const ProbabilityMap& l, const CostWeights& w) {
  if (o.width != l.width || o.height != l.height) throw ArgumentError("cost maps differ in shape");
  double fp = 0.0, fn = 0.0;
  for (std::size_t i = 0; i < o.data.size(); ++i) {
    const double oi = o.data[i], li = l.data[i];
    fp += (oi - li) * (1.0 - li);
    fn += (li - oi) * li;
  }
  return w.w_fp * fp + w.w_fn * fn;
}

LatticeFit fit_lattice_over(const ProbabilityMap& o, const std::vector<Centroid>& cents,
                            const std::vector<AnchorPair>& pairs, const LatticeFitParams& params) {
  if (params.weights.w_fp < 0.0 || params.weights.w_fn < 0.0 ||
      (params.weights.w_fp == 0.0 && params.weights.w_fn == 0.0)) {
    throw ArgumentError("cost weights must be >= 0 and not both zero");
  }
  std::vector<double> costs(pairs.size(), std::numeric_limits<double>::infinity());
  parallel_for(pairs.size(), params.threads, [&](std::size_t i) {
    const double d = distance(pairs[i].a, pairs[i].b);
    if (d < params.min_spacing || !(d > 0.0)) return;
    const Lattice l = Lattice::from_anchors(pairs[i].a, pairs[i].b, o.width, o.height);
    const double radius = params.radius.value_or(default_render_radius(d));
    costs[i] = lattice_cost(o, render_lattice(l, o.width, o.height, radius), params.weights);
  });

  // Serial reduction keeps the winner independent of scheduling.
  auto key = [&](std::size_t i) {
    const auto& p = pairs[i];
    return std::make_tuple(costs[i], distance(p.a, p.b), p.a.x, p.a.y, p.b.x, p.b.y);
  };
  std::size_t best = pairs.size();
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (!std::isfinite(costs[i])) continue;
    if (best == pairs.size() || key(i) < key(best)) best = i;
  }
  if (best == pairs.size()) throw FitError("no candidate anchor pair with usable spacing");

  LatticeFit fit;
  fit.anchors = pairs[best];
  fit.cost = costs[best];
  fit.lattice = Lattice::from_anchors(pairs[best].a, pairs[best].b, o.width, o.height);
  fit.centroids = cents;
  fit.candidates_evaluated = pairs.size();
  return fit;
}

LatticeFit fit_lattice(const ProbabilityMap& o, const LatticeFitParams& params) {
  const auto cents = extract_centroids(o, params.threshold, params.min_region);
  const auto pairs = candidate_anchor_pairs(cents, params.k);
  return fit_lattice_over(o, cents, pairs, params);
}

std::vector<HoleCrop> lattice_crops(const Lattice& l, const GrayImage* img, const ProbabilityMap& o,
                                    double margin, std::optional<double> prob_threshold) {
  if (img != nullptr && (img->width != o.width || img->height != o.height)) {
    throw ArgumentError("image and probability map differ in shape");
  }
  const double side = l.spacing - margin;
  if (!(side > 0.0)) throw GeometryError("lattice spacing must exceed the crop margin");
  const int side_px = std::max(1, static_cast<int>(std::lround(side)));
  std::vector<HoleCrop> out;
  for (const Point2d p : l.points) {
    const int x0 = static_cast<int>(std::lround(p.x - 0.5 * (side_px - 1)));
    const int y0 = static_cast<int>(std::lround(p.y - 0.5 * (side_px - 1)));
    if (x0 < 0 || y0 < 0 || x0 + side_px > o.width || y0 + side_px > o.height) continue;
    HoleCrop crop;
    crop.center = p;
    crop.side = side;
    crop.x0 = x0;
    crop.y0 = y0;
    crop.side_px = side_px;
    for (int y = y0; y < y0 + side_px; ++y) {
      for (int x = x0; x < x0 + side_px; ++x) crop.prob_sum += o.at(x, y);
    }
    if (prob_threshold && !(crop.prob_sum > *prob_threshold)) continue;
    if (img != nullptr) {
      crop.pixels = GrayImage(side_px, side_px);
      crop.pixels.id = img->id;
      for (int y = 0; y < side_px; ++y) {
        for (int x = 0; x < side_px; ++x) crop.pixels.at(x, y) = img->at(x0 + x, y0 + y);
      }
    }
    out.push_back(std::move(crop));
  }
  return out;
}

std::vector<Region> crop_regions(const std::vector<HoleCrop>& crops) {
  std::vector<Region> out;
  out.reserve(crops.size());
  for (const auto& c : crops) out.push_back(Region::square(c.center, c.side, RegionSource::kLatticeCrop));
  return out;
}

std::vector<Region> centroid_regions(const std::vector<Centroid>& cents, double radius) {
  std::vector<Region> out;
  out.reserve(cents.size());
  for (const auto& c : cents) out.push_back(Region::circle({c.x, c.y}, radius, RegionSource::kCentroidCircle));
  return out;
}

}  // namespace gridtarget
