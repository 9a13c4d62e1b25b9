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

#include "gridtarget/segment.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <utility>

#include "gridtarget/error.hpp"

namespace gridtarget {

namespace {

struct ValueCount {
  double value;
  double count;
};

double log_sum_exp(double a, double b) {
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

// ln(w) + x ln(r) - r, with the 0 * ln(0) term taken as 0.
double component_log_density(double x, double weight, double rate) {
  return std::log(weight) + (x == 0.0 ? 0.0 : x * std::log(rate)) - rate;
}

}  // namespace

double PoissonMixture::decision_boundary() const {
  return (rate_fg - rate_bg + std::log(weight_bg / weight_fg)) / std::log(rate_fg / rate_bg);
}

PoissonMixture fit_poisson_mixture(const GrayImage& img, EmOptions opts) {
  if (img.data.empty()) throw DegenerateDataError("empty image");
  if (!(opts.tol > 0.0) || opts.max_iters < 1) throw ArgumentError("EM tol must be > 0 and max_iters >= 1");

  std::vector<double> sorted = img.data;
  for (double v : sorted) {
    if (!std::isfinite(v)) throw ArgumentError("non-finite intensity");
    if (v < 0.0) throw ArgumentError("negative intensity");
  }
  std::sort(sorted.begin(), sorted.end());
  if (sorted.front() == sorted.back()) throw DegenerateDataError("all pixels have the same intensity");

  // EM runs over the distinct intensities weighted by multiplicity.
  std::vector<ValueCount> hist;
  for (double v : sorted) {
    if (!hist.empty() && hist.back().value == v) {
      hist.back().count += 1.0;
    } else {
      hist.push_back({v, 1.0});
    }
  }
  const double n = static_cast<double>(sorted.size());
  double total = 0.0;
  for (const auto& h : hist) total += h.value * h.count;
  const double mean = total / n;
  const double rate_floor = 1e-9 * std::max(1.0, mean);

  auto percentile = [&](double q) { return sorted[static_cast<std::size_t>(q * (n - 1))]; };
  PoissonMixture m;
  m.rate_bg = percentile(0.25);
  m.rate_fg = percentile(0.75);
  if (m.rate_bg == m.rate_fg) {
    m.rate_bg = sorted.front();
    m.rate_fg = sorted.back();
  }
  m.rate_bg = std::max(m.rate_bg, rate_floor);
  m.rate_fg = std::max(m.rate_fg, rate_floor);
  m.weight_bg = m.weight_fg = 0.5;

  std::vector<double> resp_fg(hist.size());
  auto e_step = [&]() {
    double ll = 0.0;
    for (std::size_t i = 0; i < hist.size(); ++i) {
      const double lb = component_log_density(hist[i].value, m.weight_bg, m.rate_bg);
      const double lf = component_log_density(hist[i].value, m.weight_fg, m.rate_fg);
      const double lse = log_sum_exp(lb, lf);
      resp_fg[i] = std::exp(lf - lse);
      ll += hist[i].count * lse;
    }
    return ll;
  };

  double ll = e_step();
  m.log_likelihood_trace.push_back(ll);
  bool collapsed = false;
  for (int it = 1; it <= opts.max_iters; ++it) {
    double n_fg = 0.0, s_fg = 0.0, n_bg = 0.0, s_bg = 0.0;
    for (std::size_t i = 0; i < hist.size(); ++i) {
      const double g = resp_fg[i] * hist[i].count;
      const double b = (1.0 - resp_fg[i]) * hist[i].count;
      n_fg += g;
      s_fg += g * hist[i].value;
      n_bg += b;
      s_bg += b * hist[i].value;
    }
    m.iterations = it;
    if (n_fg <= 0.0 || n_bg <= 0.0) {
      collapsed = true;
      break;
    }
    m.weight_fg = n_fg / n;
    m.weight_bg = 1.0 - m.weight_fg;
    m.rate_fg = std::max(s_fg / n_fg, rate_floor);
    m.rate_bg = std::max(s_bg / n_bg, rate_floor);

    const double next = e_step();
    // EM never decreases the likelihood; allow for summation rounding only.
    assert(next >= ll - 1e-9 * std::abs(ll));
    m.log_likelihood_trace.push_back(next);
    const double change = std::abs(next - ll);
    ll = next;
    if (change < opts.tol * std::abs(ll)) break;
  }
  m.log_likelihood = ll;

  if (m.rate_bg > m.rate_fg) {
    std::swap(m.rate_bg, m.rate_fg);
    std::swap(m.weight_bg, m.weight_fg);
  }
  // A single Poisson at the sample mean has one parameter against the
  // mixture's three; BIC prefers it unless the mixture gains more than ln n.
  double single_ll = 0.0;
  const double log_mean = std::log(std::max(mean, rate_floor));
  for (const auto& h : hist) single_ll += h.count * (h.value * log_mean - mean);
  m.degenerate = collapsed || std::abs(m.rate_fg - m.rate_bg) < 0.05 * mean || ll - single_ll < std::log(n);
  return m;
}

std::pair<double, double> responsibilities(double x, const PoissonMixture& m) {
  const double lb = component_log_density(x, m.weight_bg, m.rate_bg);
  const double lf = component_log_density(x, m.weight_fg, m.rate_fg);
  const double lse = log_sum_exp(lb, lf);
  return {std::exp(lb - lse), std::exp(lf - lse)};
}

PixelMask classify_pixels(const GrayImage& img, const PoissonMixture& m) {
  if (m.degenerate || !(m.rate_fg > m.rate_bg) || m.rate_bg <= 0.0 || m.weight_fg <= 0.0 ||
      m.weight_bg <= 0.0) {
    throw DegenerateDataError("cannot classify pixels with a degenerate mixture");
  }
  const double boundary = m.decision_boundary();
  PixelMask mask(img.width, img.height);
  for (std::size_t i = 0; i < img.data.size(); ++i) mask.bits[i] = img.data[i] >= boundary ? 1 : 0;
  return mask;
}

std::vector<PixelComponent> connected_components(const PixelMask& mask, Connectivity conn,
                                                 std::size_t min_size) {
  const int w = mask.width, h = mask.height;
  std::vector<std::uint8_t> seen(mask.bits.size(), 0);
  std::vector<PixelComponent> out;
  std::vector<PixelCoord> stack;

  static constexpr int kDx[8] = {1, -1, 0, 0, 1, 1, -1, -1};
  static constexpr int kDy[8] = {0, 0, 1, -1, 1, -1, 1, -1};
  const int neighbours = conn == Connectivity::kEight ? 8 : 4;

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t idx = static_cast<std::size_t>(y) * w + x;
      if (!mask.bits[idx] || seen[idx]) continue;
      PixelComponent comp;
      comp.min_x = x;
      comp.min_y = y;
      seen[idx] = 1;
      stack.push_back({x, y});
      while (!stack.empty()) {
        const PixelCoord p = stack.back();
        stack.pop_back();
        comp.pixels.push_back(p);
        comp.min_x = std::min(comp.min_x, p.x);
        for (int k = 0; k < neighbours; ++k) {
          const int nx = p.x + kDx[k], ny = p.y + kDy[k];
          if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
          const std::size_t nidx = static_cast<std::size_t>(ny) * w + nx;
          if (mask.bits[nidx] && !seen[nidx]) {
            seen[nidx] = 1;
            stack.push_back({nx, ny});
          }
        }
      }
      if (comp.size() >= min_size) out.push_back(std::move(comp));
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const PixelComponent& a, const PixelComponent& b) {
    return std::pair(a.min_y, a.min_x) < std::pair(b.min_y, b.min_x);
  });
  return out;
}

std::size_t default_min_component_size(int width, int height) {
  const double px = static_cast<double>(width) * height;
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(0.0005 * px)));
}

}  // namespace gridtarget
