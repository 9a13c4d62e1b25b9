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

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gridtarget/evalmatch.hpp"
#include "gridtarget/geometry.hpp"
#include "gridtarget/image.hpp"

namespace gridtarget {

// Low-mag grid: bright squares on dark bars, Poisson pixel noise.
struct LowMagConfig {
  int width = 1024;
  int height = 1024;
  double grid_pitch = 96.0;   // centre-to-centre square distance
  double square_size = 64.0;  // nominal side
  double angle = 0.0;         // degrees, [0, 90)
  double bg_rate = 5.0;
  double fg_rate = 50.0;
  double broken_fraction = 0.0;
  // Per-square side is square_size * (1 + size_jitter * U(-1, 1)).
  double size_jitter = 0.0;
  // Squares closer than this to the border are not rendered.
  double edge_margin = 4.0;
};

struct SquareTruth {
  Point2d center;
  double size = 0.0;
  bool broken = false;
  // Unbroken and at least the nominal size.
  bool selected = false;
};

struct LowMagTruth {
  double angle = 0.0;
  std::vector<SquareTruth> squares;
  GrayImage image;
};

// Throws ArgumentError unless fg_rate > bg_rate > 0 and the geometry is sane.
LowMagTruth gen_lowmag(const LowMagConfig& cfg, std::uint64_t seed);

// Medium-mag holey film: holes on a square lattice plus the ideal hole-centre
// probability map a perfect localizer would produce.
struct MedMagConfig {
  int width = 768;
  int height = 768;
  double spacing = 100.0;
  double hole_radius = 0.0;  // 0: spacing / 5
  double delete_frac = 0.2;  // holes missing from the probability map
  int spurious_blobs = 5;    // blobs away from any hole
  bool invert = false;
  double contrast = 0.5;     // relative brightness of hole interiors
  double background = 100.0;
  double angle = -1.0;       // degrees; negative draws one from the seed
  // Selection probability for holes present in / missing from the map.
  double select_frac = 0.6;
  double select_frac_deleted = 0.1;
};

struct HoleTruth {
  Point2d center;
  bool deleted = false;
  bool selected = false;
};

struct MedMagTruth {
  Point2d anchor_a;
  Point2d anchor_b;
  double spacing = 0.0;
  double angle = 0.0;
  double hole_radius = 0.0;
  std::vector<HoleTruth> holes;
  std::vector<Point2d> spurious;
  bool inverted = false;
  GrayImage image;
  ProbabilityMap ideal_map;
};

// Ideal-map blobs are Gaussians with sigma = hole_radius / 3, combined by
// pixel-wise maximum. Throws ArgumentError when spacing <= 2 * hole_radius.
MedMagTruth gen_medmag(const MedMagConfig& cfg, std::uint64_t seed);

std::string lowmag_truth_json(const LowMagTruth& t, const std::string& session_id);
std::string medmag_truth_json(const MedMagTruth& t, const std::string& session_id);

// Selection rows for evaluation: every planted square, or the selected holes.
std::vector<Selection> lowmag_selections(const LowMagTruth& t, const std::string& session_id);
std::vector<Selection> medmag_selections(const MedMagTruth& t, const std::string& session_id);

// Writes {dir}/{session}/{image_id}.{mrc,json} (plus .pmap for med-mag).
void write_lowmag_sample(const std::filesystem::path& dir, const std::string& session_id, const LowMagTruth& t);
void write_medmag_sample(const std::filesystem::path& dir, const std::string& session_id, const MedMagTruth& t);

}  // namespace gridtarget
