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

#include "gridtarget/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "gridtarget/error.hpp"
#include "gridtarget/lattice.hpp"
#include "json.hpp"

namespace gridtarget {

using nlohmann::json;

namespace {

std::string image_id_for(std::uint64_t seed, const char* kind) {
  return std::string(kind) + "_" + std::to_string(seed);
}

// Poisson draw per pixel from a rate map, raster order.
void sample_poisson(GrayImage& img, const std::vector<double>& rates, std::mt19937_64& rng) {
  for (std::size_t i = 0; i < rates.size(); ++i) {
    std::poisson_distribution<long> draw(rates[i]);
    img.data[i] = static_cast<double>(draw(rng));
  }
}

}  // namespace

LowMagTruth gen_lowmag(const LowMagConfig& cfg, std::uint64_t seed) {
  if (!(cfg.bg_rate > 0.0) || !(cfg.fg_rate > cfg.bg_rate)) {
    throw ArgumentError("low-mag rates must satisfy fg_rate > bg_rate > 0");
  }
  if (cfg.width < 8 || cfg.height < 8) throw ArgumentError("low-mag image too small");
  if (!(cfg.square_size > 0.0) || cfg.size_jitter < 0.0 || cfg.size_jitter >= 1.0 ||
      !(cfg.square_size * (1.0 + cfg.size_jitter) < cfg.grid_pitch)) {
    throw ArgumentError("squares must be smaller than the grid pitch");
  }
  if (cfg.angle < 0.0 || cfg.angle >= 90.0) throw ArgumentError("grid angle must lie in [0, 90)");
  if (cfg.broken_fraction < 0.0 || cfg.broken_fraction > 1.0) throw ArgumentError("broken_fraction outside [0, 1]");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Point2d u{std::cos(deg2rad(cfg.angle)), std::sin(deg2rad(cfg.angle))};
  const Point2d v = perp(u);
  const Point2d origin = Point2d{0.5 * cfg.width, 0.5 * cfg.height} + (unit(rng) * cfg.grid_pitch) * u +
                         (unit(rng) * cfg.grid_pitch) * v;

  LowMagTruth truth;
  truth.angle = cfg.angle;
  truth.image = GrayImage(cfg.width, cfg.height);
  truth.image.id = image_id_for(seed, "lowmag");

  struct Planted {
    SquareTruth truth;
    Point2d corner_sign;
  };
  std::vector<Planted> planted;
  const int reach = static_cast<int>(std::ceil(std::hypot(cfg.width, cfg.height) / cfg.grid_pitch)) + 1;
  for (int j = -reach; j <= reach; ++j) {
    for (int i = -reach; i <= reach; ++i) {
      const Point2d c = origin + (i * cfg.grid_pitch) * u + (j * cfg.grid_pitch) * v;
      // Draws happen for every lattice site so the layout is seed-stable.
      const double size = cfg.square_size * (1.0 + cfg.size_jitter * (2.0 * unit(rng) - 1.0));
      const bool broken = unit(rng) < cfg.broken_fraction;
      const double corner = unit(rng);
      const double half = 0.5 * size;
      bool inside = true;
      for (const Point2d k : {c - half * u - half * v, c + half * u - half * v, c + half * u + half * v,
                              c - half * u + half * v}) {
        inside = inside && k.x >= cfg.edge_margin && k.y >= cfg.edge_margin &&
                 k.x <= cfg.width - 1 - cfg.edge_margin && k.y <= cfg.height - 1 - cfg.edge_margin;
      }
      if (!inside) continue;
      SquareTruth sq;
      sq.center = c;
      sq.size = size;
      sq.broken = broken;
      sq.selected = !broken && (cfg.size_jitter == 0.0 || size >= cfg.square_size);
      const int quadrant = static_cast<int>(corner * 4.0) % 4;
      planted.push_back({sq, {quadrant & 1 ? 1.0 : -1.0, quadrant & 2 ? 1.0 : -1.0}});
    }
  }

  std::vector<double> rates(truth.image.size(), cfg.bg_rate);
  for (const auto& p : planted) {
    const double half = 0.5 * p.truth.size;
    const double cut = 0.45 * p.truth.size;
    const double r = half * std::sqrt(2.0) + 1.0;
    const int x0 = std::max(0, static_cast<int>(std::floor(p.truth.center.x - r)));
    const int x1 = std::min(cfg.width - 1, static_cast<int>(std::ceil(p.truth.center.x + r)));
    const int y0 = std::max(0, static_cast<int>(std::floor(p.truth.center.y - r)));
    const int y1 = std::min(cfg.height - 1, static_cast<int>(std::ceil(p.truth.center.y + r)));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const Point2d d = Point2d{static_cast<double>(x), static_cast<double>(y)} - p.truth.center;
        const double lu = dot(d, u), lv = dot(d, v);
        if (std::abs(lu) > half || std::abs(lv) > half) continue;
        if (p.truth.broken && p.corner_sign.x * lu + p.corner_sign.y * lv > p.truth.size - cut) continue;
        rates[static_cast<std::size_t>(y) * cfg.width + x] = cfg.fg_rate;
      }
    }
    truth.squares.push_back(p.truth);
  }
  sample_poisson(truth.image, rates, rng);
  return truth;
}

MedMagTruth gen_medmag(const MedMagConfig& cfg, std::uint64_t seed) {
  const double radius = cfg.hole_radius > 0.0 ? cfg.hole_radius : cfg.spacing / 5.0;
  if (!(cfg.spacing > 2.0 * radius)) throw ArgumentError("hole spacing must exceed the hole diameter");
  if (cfg.width < 8 || cfg.height < 8) throw ArgumentError("med-mag image too small");
  if (cfg.delete_frac < 0.0 || cfg.delete_frac > 1.0) throw ArgumentError("delete_frac outside [0, 1]");
  if (cfg.spurious_blobs < 0) throw ArgumentError("spurious_blobs must be >= 0");
  if (!(cfg.background > 0.0) || cfg.contrast <= -1.0) throw ArgumentError("invalid med-mag intensities");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  MedMagTruth t;
  t.angle = cfg.angle >= 0.0 ? std::fmod(cfg.angle, 90.0) : 90.0 * unit(rng);
  t.spacing = cfg.spacing;
  t.hole_radius = radius;
  t.inverted = cfg.invert;
  const Point2d u = cfg.spacing * Point2d{std::cos(deg2rad(t.angle)), std::sin(deg2rad(t.angle))};
  t.anchor_a = Point2d{0.5 * cfg.width, 0.5 * cfg.height} + unit(rng) * u + unit(rng) * perp(u);
  t.anchor_b = t.anchor_a + u;

  const Lattice lattice = Lattice::from_anchors(t.anchor_a, t.anchor_b, cfg.width, cfg.height);
  for (const Point2d p : lattice.points) {
    if (p.x >= radius && p.y >= radius && p.x <= cfg.width - 1 - radius && p.y <= cfg.height - 1 - radius) {
      t.holes.push_back({p, false, false});
    }
  }
  std::vector<std::size_t> order(t.holes.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_deleted = static_cast<std::size_t>(std::lround(cfg.delete_frac * static_cast<double>(t.holes.size())));
  for (std::size_t i = 0; i < n_deleted; ++i) t.holes[order[i]].deleted = true;
  for (auto& h : t.holes) h.selected = unit(rng) < (h.deleted ? cfg.select_frac_deleted : cfg.select_frac);

  const double keep_away = cfg.spacing / 3.0;
  for (int placed = 0, tries = 0; placed < cfg.spurious_blobs && tries < 10000; ++tries) {
    const Point2d p{radius + unit(rng) * (cfg.width - 1 - 2 * radius), radius + unit(rng) * (cfg.height - 1 - 2 * radius)};
    bool ok = true;
    for (const auto& h : t.holes) ok = ok && distance(p, h.center) >= keep_away;
    for (const auto& s : t.spurious) ok = ok && distance(p, s) >= keep_away;
    if (!ok) continue;
    t.spurious.push_back(p);
    ++placed;
  }

  // Ideal map.
  t.ideal_map = ProbabilityMap(cfg.width, cfg.height, 0.0);
  const double sigma = radius / 3.0;
  auto stamp_blob = [&](Point2d c) {
    const double reach = 4.0 * sigma;
    const int x0 = std::max(0, static_cast<int>(std::floor(c.x - reach)));
    const int x1 = std::min(cfg.width - 1, static_cast<int>(std::ceil(c.x + reach)));
    const int y0 = std::max(0, static_cast<int>(std::floor(c.y - reach)));
    const int y1 = std::min(cfg.height - 1, static_cast<int>(std::ceil(c.y + reach)));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const double d2 = (x - c.x) * (x - c.x) + (y - c.y) * (y - c.y);
        double& o = t.ideal_map.at(x, y);
        o = std::max(o, std::exp(-0.5 * d2 / (sigma * sigma)));
      }
    }
  };
  for (const auto& h : t.holes) {
    if (!h.deleted) stamp_blob(h.center);
  }
  for (const auto& s : t.spurious) stamp_blob(s);

  // Image: every hole is physically present, deleted or not.
  std::vector<double> rates(static_cast<std::size_t>(cfg.width) * cfg.height, cfg.background);
  const double hole_rate = cfg.background * (1.0 + cfg.contrast);
  for (const Point2d p : lattice.points_within(cfg.width, cfg.height, radius)) {
    const int x0 = std::max(0, static_cast<int>(std::floor(p.x - radius)));
    const int x1 = std::min(cfg.width - 1, static_cast<int>(std::ceil(p.x + radius)));
    const int y0 = std::max(0, static_cast<int>(std::floor(p.y - radius)));
    const int y1 = std::min(cfg.height - 1, static_cast<int>(std::ceil(p.y + radius)));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        if ((x - p.x) * (x - p.x) + (y - p.y) * (y - p.y) <= radius * radius) {
          rates[static_cast<std::size_t>(y) * cfg.width + x] = hole_rate;
        }
      }
    }
  }
  t.image = GrayImage(cfg.width, cfg.height);
  t.image.id = image_id_for(seed, "medmag");
  sample_poisson(t.image, rates, rng);
  if (cfg.invert) {
    const double top = *std::max_element(t.image.data.begin(), t.image.data.end());
    for (double& x : t.image.data) x = top - x;
  }
  return t;
}

std::string lowmag_truth_json(const LowMagTruth& t, const std::string& session_id) {
  json j;
  j["format"] = "gridtarget-truth";
  j["version"] = 1;
  j["kind"] = "lowmag";
  j["image_id"] = t.image.id;
  j["session_id"] = session_id;
  j["width"] = t.image.width;
  j["height"] = t.image.height;
  j["angle"] = t.angle;
  json squares = json::array();
  for (const auto& s : t.squares) {
    squares.push_back({{"cx", s.center.x}, {"cy", s.center.y}, {"size", s.size}, {"broken", s.broken},
                       {"selected", s.selected}});
  }
  j["squares"] = std::move(squares);
  return j.dump(1);
}

std::string medmag_truth_json(const MedMagTruth& t, const std::string& session_id) {
  json j;
  j["format"] = "gridtarget-truth";
  j["version"] = 1;
  j["kind"] = "medmag";
  j["image_id"] = t.image.id;
  j["session_id"] = session_id;
  j["width"] = t.image.width;
  j["height"] = t.image.height;
  j["anchor_a"] = {t.anchor_a.x, t.anchor_a.y};
  j["anchor_b"] = {t.anchor_b.x, t.anchor_b.y};
  j["spacing"] = t.spacing;
  j["angle"] = t.angle;
  j["hole_radius"] = t.hole_radius;
  j["inverted"] = t.inverted;
  json holes = json::array();
  for (const auto& h : t.holes) {
    holes.push_back({{"cx", h.center.x}, {"cy", h.center.y}, {"deleted", h.deleted}, {"selected", h.selected}});
  }
  j["holes"] = std::move(holes);
  json spurious = json::array();
  for (const auto& s : t.spurious) spurious.push_back({s.x, s.y});
  j["spurious"] = std::move(spurious);
  return j.dump(1);
}

std::vector<Selection> lowmag_selections(const LowMagTruth& t, const std::string& session_id) {
  std::vector<Selection> out;
  for (const auto& s : t.squares) out.push_back({s.center.x, s.center.y, t.image.id, session_id});
  return out;
}

std::vector<Selection> medmag_selections(const MedMagTruth& t, const std::string& session_id) {
  std::vector<Selection> out;
  for (const auto& h : t.holes) {
    if (h.selected) out.push_back({h.center.x, h.center.y, t.image.id, session_id});
  }
  return out;
}

namespace {

// Image ids may contain dots, so append rather than replace an extension.
std::filesystem::path with_ext(std::filesystem::path base, const char* ext) { return base += ext; }

}  // namespace

void write_lowmag_sample(const std::filesystem::path& dir, const std::string& session_id, const LowMagTruth& t) {
  const auto base = dir / session_id / t.image.id;
  save_mrc(t.image, with_ext(base, ".mrc"));
  write_file_atomic(with_ext(base, ".json"), lowmag_truth_json(t, session_id));
}

void write_medmag_sample(const std::filesystem::path& dir, const std::string& session_id, const MedMagTruth& t) {
  const auto base = dir / session_id / t.image.id;
  save_mrc(t.image, with_ext(base, ".mrc"));
  save_pmap(t.ideal_map, with_ext(base, ".pmap"));
  write_file_atomic(with_ext(base, ".json"), medmag_truth_json(t, session_id));
}

}  // namespace gridtarget
