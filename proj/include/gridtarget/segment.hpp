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
#include <utility>
#include <vector>

#include "gridtarget/image.hpp"

namespace gridtarget {

// Two-component Poisson mixture over pixel intensities. The background
// component is the dimmer one (grid bars); the foreground is the squares.
struct PoissonMixture {
  double weight_bg = 0.5;
  double weight_fg = 0.5;
  double rate_bg = 0.0;
  double rate_fg = 0.0;
  double log_likelihood = 0.0;
  int iterations = 0;
  // Components collapsed (|rate_fg - rate_bg| < 0.05 * mean intensity), or
  // the mixture does not beat a single Poisson by BIC.
  bool degenerate = false;
  // Log-likelihood after every EM iteration, starting with the initial guess.
  std::vector<double> log_likelihood_trace;

  // x* such that x >= x* classifies as foreground.
  double decision_boundary() const;
};

struct EmOptions {
  double tol = 1e-6;
  int max_iters = 100;
};

// Per-pixel log-density is x ln r - r; the x! term is constant per pixel and
// dropped. Throws DegenerateDataError when every pixel is identical and
// ArgumentError on non-finite input.
PoissonMixture fit_poisson_mixture(const GrayImage& img, EmOptions opts = {});

// Posterior (background, foreground) membership of intensity x.
std::pair<double, double> responsibilities(double x, const PoissonMixture& m);

// Foreground iff the weighted foreground log-density is at least the
// background one. Throws DegenerateDataError for a collapsed mixture.
PixelMask classify_pixels(const GrayImage& img, const PoissonMixture& m);

struct PixelCoord {
  int x = 0;
  int y = 0;
  friend bool operator==(PixelCoord, PixelCoord) = default;
};

struct PixelComponent {
  std::vector<PixelCoord> pixels;
  int min_x = 0;
  int min_y = 0;
  std::size_t size() const { return pixels.size(); }
};

enum class Connectivity { kFour = 4, kEight = 8 };

// Flood-fill labelling. Components smaller than min_size are dropped; the
// rest are ordered by (min y, min x) over their pixels.
std::vector<PixelComponent> connected_components(const PixelMask& mask, Connectivity conn,
                                                 std::size_t min_size);

// Default minimum component size: 0.05% of the image's pixels.
std::size_t default_min_component_size(int width, int height);

}  // namespace gridtarget
