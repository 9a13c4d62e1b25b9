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

// Shared fixtures and brute-force oracles for the unit and acceptance tests.
// Oracles here deliberately avoid the library code paths they check.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "gridtarget/geometry.hpp"
#include "gridtarget/image.hpp"
#include "gridtarget/lattice.hpp"

namespace gridtarget::testing {

// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("gridtarget_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline GrayImage random_image(int w, int h, std::uint64_t seed, double lo = 0.0, double hi = 100.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  GrayImage img(w, h);
  for (auto& v : img.data) v = u(rng);
  return img;
}

inline ProbabilityMap random_map(int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ProbabilityMap m(w, h);
  for (auto& v : m.data) v = u(rng);
  return m;
}

// Clockwise quarter turn: pixel (x, y) moves to (h - 1 - y, x).
template <typename Img>
Img rot90(const Img& src) {
  Img out = src;
  out.width = src.height;
  out.height = src.width;
  for (int y = 0; y < src.height; ++y) {
    for (int x = 0; x < src.width; ++x) out.at(src.height - 1 - y, x) = src.at(x, y);
  }
  return out;
}

inline Point2d rot90_point(Point2d p, int src_height) { return {src_height - 1 - p.y, p.x}; }

// Full 2D convolution with an explicitly built 2D Gaussian and mirror
// padding that repeats the edge sample.
template <typename Img>
Img direct_blur(const Img& src, double sigma) {
  const int r = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k1;
  for (int i = -r; i <= r; ++i) k1.push_back(std::exp(-0.5 * i * i / (sigma * sigma)));
  double total = 0.0;
  for (double a : k1) {
    for (double b : k1) total += a * b;
  }
  auto mirror = [](int i, int n) {
    while (i < 0 || i >= n) i = i < 0 ? -i - 1 : 2 * n - i - 1;
    return i;
  };
  Img out = src;
  for (int y = 0; y < src.height; ++y) {
    for (int x = 0; x < src.width; ++x) {
      double acc = 0.0;
      for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
          acc += k1[dy + r] * k1[dx + r] * src.at(mirror(x + dx, src.width), mirror(y + dy, src.height));
        }
      }
      out.at(x, y) = acc / total;
    }
  }
  return out;
}

// Crossing-number test with an explicit on-edge check.
inline bool point_in_polygon(const std::vector<Point2d>& poly, Point2d p, double tol = 1e-9) {
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point2d a = poly[i];
    const Point2d b = poly[(i + 1) % n];
    const double len = std::hypot(b.x - a.x, b.y - a.y);
    const double cr = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
    const double t = ((p.x - a.x) * (b.x - a.x) + (p.y - a.y) * (b.y - a.y)) / (len * len);
    if (len > 0 && std::abs(cr) / len <= tol && t >= -tol && t <= 1 + tol) return true;
  }
  bool inside = false;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Point2d a = poly[i];
    const Point2d b = poly[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double xc = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < xc) inside = !inside;
    }
  }
  return inside;
}

// Lattice cost evaluated straight from the per-pixel penalty expression.
inline double cost_from_terms(const ProbabilityMap& o, const ProbabilityMap& l, double w_fp, double w_fn) {
  double c = 0.0;
  for (std::size_t i = 0; i < o.data.size(); ++i) {
    const double oi = o.data[i];
    const double li = l.data[i];
    c += w_fp * (oi - li) * (1.0 - li) + w_fn * (li - oi) * li;
  }
  return c;
}

struct BruteForceLattice {
  double cost = 0.0;
  double spacing = 0.0;
  Point2d a;
  Point2d b;
};

// Every ordered-by-index centroid pair, no nearest-neighbour restriction.
inline BruteForceLattice brute_force_lattice(const ProbabilityMap& o, const std::vector<Centroid>& cents,
                                             const LatticeFitParams& p) {
  BruteForceLattice best;
  bool have = false;
  for (std::size_t i = 0; i < cents.size(); ++i) {
    for (std::size_t j = i + 1; j < cents.size(); ++j) {
      const Point2d a{cents[i].x, cents[i].y};
      const Point2d b{cents[j].x, cents[j].y};
      const double d = std::hypot(b.x - a.x, b.y - a.y);
      if (d < p.min_spacing || !(d > 0)) continue;
      const Lattice l = Lattice::from_anchors(a, b, o.width, o.height);
      const double radius = p.radius.value_or(default_render_radius(d));
      const auto rendered = render_lattice(l, o.width, o.height, radius);
      const double c = cost_from_terms(o, rendered, p.weights.w_fp, p.weights.w_fn);
      if (!have || c < best.cost) {
        best = {c, d, a, b};
        have = true;
      }
    }
  }
  return best;
}

}  // namespace gridtarget::testing
