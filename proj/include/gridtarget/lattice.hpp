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
#include <optional>
#include <vector>

#include "gridtarget/evalmatch.hpp"
#include "gridtarget/geometry.hpp"
#include "gridtarget/image.hpp"

namespace gridtarget {

struct Centroid {
  double x = 0.0;
  double y = 0.0;
  double mass = 0.0;  // summed probability of the region
};

struct AnchorPair {
  std::size_t first = 0;  // indices into the centroid list, first < second
  std::size_t second = 0;
  Point2d a;
  Point2d b;
};

// Square lattice a + i*u + j*v with u = b - a and v = perp(u).
struct Lattice {
  Point2d anchor_a;
  Point2d anchor_b;
  double spacing = 0.0;
  Point2d u;
  Point2d v;
  // Lattice points whose nearest pixel lies inside the image.
  std::vector<Point2d> points;

  // Throws GeometryError for coincident anchors.
  static Lattice from_anchors(Point2d a, Point2d b, int width, int height);

  // Every lattice point within `margin` pixels of the image, row-major by
  // lattice index.
  std::vector<Point2d> points_within(int width, int height, double margin) const;
};

struct CostWeights {
  double w_fp = 1.0;  // probability outside the lattice
  double w_fn = 2.0;  // lattice over low probability
};

struct HoleCrop {
  Point2d center;
  double side = 0.0;
  int x0 = 0;  // top-left pixel of the crop box
  int y0 = 0;
  int side_px = 0;
  double prob_sum = 0.0;
  GrayImage pixels;  // empty when no image was supplied
  std::optional<bool> label;
};

// Threshold (strictly greater), 4-connected regions of at least min_region
// pixels, probability-weighted centroid of each.
std::vector<Centroid> extract_centroids(const ProbabilityMap& map, double threshold = 0.5,
                                        std::size_t min_region = 4);

// Each centroid paired with its k nearest others; unordered pairs, deduped,
// sorted by index. Throws FitError for fewer than two centroids.
std::vector<AnchorPair> candidate_anchor_pairs(const std::vector<Centroid>& cents, std::size_t k = 6);

// max(3, round(spacing / 8))
double default_render_radius(double spacing);

// Closed disks of `radius` stamped at every lattice point within spacing/2 of
// the image. The pixel nearest each point is always stamped, so radius 0
// marks single pixels. Values are 0 or 1.
ProbabilityMap render_lattice(const Lattice& l, int width, int height, double radius);

// sum_i w_fp (o_i - l_i)(1 - l_i) + w_fn (l_i - o_i) l_i
double lattice_cost(const ProbabilityMap& o, const ProbabilityMap& l, const CostWeights& w);

struct LatticeFitParams {
  double threshold = 0.5;
  std::size_t min_region = 4;
  std::size_t k = 6;
  CostWeights weights;
  // Disk radius for rendering; default_render_radius(spacing) when unset.
  std::optional<double> radius;
  // Candidate pairs closer than this are discarded before costing.
  double min_spacing = 4.0;
  int threads = 0;
};

struct LatticeFit {
  Lattice lattice;
  double cost = 0.0;
  AnchorPair anchors;
  std::vector<Centroid> centroids;
  std::size_t candidates_evaluated = 0;
};

// Minimum-cost lattice over the candidate anchor pairs. Ties go to the
// smaller spacing, then to the lexicographically smaller anchors. Parallel
// and serial runs agree exactly. Throws FitError when no usable pair exists.
LatticeFit fit_lattice(const ProbabilityMap& o, const LatticeFitParams& params = {});

// Same search over an explicit list of pairs; used by fit_lattice.
LatticeFit fit_lattice_over(const ProbabilityMap& o, const std::vector<Centroid>& cents,
                            const std::vector<AnchorPair>& pairs, const LatticeFitParams& params);

// Axis-aligned crops of side spacing - margin centred on every lattice point
// whose crop box fits inside the map. With a threshold, keeps only crops
// whose probability sum exceeds it. img may be null.
std::vector<HoleCrop> lattice_crops(const Lattice& l, const GrayImage* img, const ProbabilityMap& o,
                                    double margin = 60.0, std::optional<double> prob_threshold = std::nullopt);

std::vector<Region> crop_regions(const std::vector<HoleCrop>& crops);

// Closed disks around each centroid.
std::vector<Region> centroid_regions(const std::vector<Centroid>& cents, double radius = 50.0);

}  // namespace gridtarget
