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

#include "gridtarget/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "gridtarget/error.hpp"

namespace gridtarget {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used == v.size() && std::isfinite(d)) return d;
  } catch (const std::exception&) {
  }
  throw ArgumentError("config '" + key + "': expected a number, got '" + v + "'");
}

long long to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long long i = std::stoll(v, &used);
    if (used == v.size()) return i;
  } catch (const std::exception&) {
  }
  throw ArgumentError("config '" + key + "': expected an integer, got '" + v + "'");
}

std::size_t to_count(const std::string& key, const std::string& v) {
  const long long i = to_int(key, v);
  if (i < 0) throw ArgumentError("config '" + key + "' must be >= 0");
  return static_cast<std::size_t>(i);
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

}  // namespace

void PipelineConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ArgumentError(std::string("config: ") + what);
  };
  require(em_tol > 0.0, "em_tol must be > 0");
  require(em_max_iters >= 1, "em_max_iters must be >= 1");
  require(connectivity == 4 || connectivity == 8, "connectivity must be 4 or 8");
  require(knn >= 1, "knn must be >= 1");
  require(w_fp >= 0.0 && w_fn >= 0.0 && (w_fp > 0.0 || w_fn > 0.0), "w_fp, w_fn must be >= 0 and not both 0");
  require(centroid_threshold >= 0.0 && centroid_threshold < 1.0, "centroid_threshold must lie in [0, 1)");
  require(min_spacing >= 0.0, "min_spacing must be >= 0");
  require(crop_margin >= 0.0, "crop_margin must be >= 0");
  require(!prob_threshold || *prob_threshold >= 0.0, "prob_threshold must be >= 0");
  require(!render_radius || *render_radius >= 0.0, "render_radius must be >= 0");
  require(centroid_radius > 0.0, "centroid_radius must be > 0");
  require(jobs >= 0, "jobs must be >= 0");
  require(trees >= 1, "trees must be >= 1");
  require(max_depth >= 0, "max_depth must be >= 0");
  require(logreg_epochs >= 1, "logreg_epochs must be >= 1");
  require(logreg_lr > 0.0, "logreg_lr must be > 0");
}

SquareDetectionOptions PipelineConfig::square_options() const {
  SquareDetectionOptions o;
  o.em = {em_tol, em_max_iters};
  o.connectivity = connectivity == 8 ? Connectivity::kEight : Connectivity::kFour;
  o.min_component_size = min_component_size;
  return o;
}

LatticeFitParams PipelineConfig::lattice_params() const {
  LatticeFitParams p;
  p.threshold = centroid_threshold;
  p.min_region = min_region;
  p.k = knn;
  p.weights = {w_fp, w_fn};
  p.radius = render_radius;
  p.min_spacing = min_spacing;
  p.threads = jobs;
  return p;
}

void apply_setting(PipelineConfig& cfg, const std::string& raw_key, const std::string& raw_value) {
  const std::string key = trim(raw_key), v = trim(raw_value);
  if (key == "em_tol") cfg.em_tol = to_double(key, v);
  else if (key == "em_max_iters") cfg.em_max_iters = static_cast<int>(to_int(key, v));
  else if (key == "connectivity") cfg.connectivity = static_cast<int>(to_int(key, v));
  else if (key == "min_component_size") cfg.min_component_size = to_count(key, v);
  else if (key == "knn") cfg.knn = to_count(key, v);
  else if (key == "w_fp") cfg.w_fp = to_double(key, v);
  else if (key == "w_fn") cfg.w_fn = to_double(key, v);
  else if (key == "centroid_threshold") cfg.centroid_threshold = to_double(key, v);
  else if (key == "min_region") cfg.min_region = to_count(key, v);
  else if (key == "min_spacing") cfg.min_spacing = to_double(key, v);
  else if (key == "crop_margin") cfg.crop_margin = to_double(key, v);
  else if (key == "prob_threshold") {
    if (v == "none") cfg.prob_threshold.reset();
    else cfg.prob_threshold = to_double(key, v);
  } else if (key == "render_radius") {
    if (v == "auto") cfg.render_radius.reset();
    else cfg.render_radius = to_double(key, v);
  } else if (key == "centroid_radius") cfg.centroid_radius = to_double(key, v);
  else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(to_count(key, v));
  else if (key == "jobs") cfg.jobs = static_cast<int>(to_int(key, v));
  else if (key == "trees") cfg.trees = static_cast<int>(to_int(key, v));
  else if (key == "max_depth") cfg.max_depth = static_cast<int>(to_int(key, v));
  else if (key == "logreg_epochs") cfg.logreg_epochs = static_cast<int>(to_int(key, v));
  else if (key == "logreg_lr") cfg.logreg_lr = to_double(key, v);
  else throw ArgumentError("unknown config key '" + key + "'");
}

void apply_config_stream(PipelineConfig& cfg, std::istream& in) {
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ArgumentError("config line " + std::to_string(line_no) + ": expected key=value");
    }
    apply_setting(cfg, t.substr(0, eq), t.substr(eq + 1));
  }
}

void apply_config_file(PipelineConfig& cfg, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open config " + path.string());
  apply_config_stream(cfg, in);
}

std::map<std::string, std::string> config_to_map(const PipelineConfig& cfg) {
  return {
      {"em_tol", fmt(cfg.em_tol)},
      {"em_max_iters", std::to_string(cfg.em_max_iters)},
      {"connectivity", std::to_string(cfg.connectivity)},
      {"min_component_size", std::to_string(cfg.min_component_size)},
      {"knn", std::to_string(cfg.knn)},
      {"w_fp", fmt(cfg.w_fp)},
      {"w_fn", fmt(cfg.w_fn)},
      {"centroid_threshold", fmt(cfg.centroid_threshold)},
      {"min_region", std::to_string(cfg.min_region)},
      {"min_spacing", fmt(cfg.min_spacing)},
      {"crop_margin", fmt(cfg.crop_margin)},
      {"prob_threshold", cfg.prob_threshold ? fmt(*cfg.prob_threshold) : "none"},
      {"render_radius", cfg.render_radius ? fmt(*cfg.render_radius) : "auto"},
      {"centroid_radius", fmt(cfg.centroid_radius)},
      {"seed", std::to_string(cfg.seed)},
      {"jobs", std::to_string(cfg.jobs)},
      {"trees", std::to_string(cfg.trees)},
      {"max_depth", std::to_string(cfg.max_depth)},
      {"logreg_epochs", std::to_string(cfg.logreg_epochs)},
      {"logreg_lr", fmt(cfg.logreg_lr)},
  };
}

}  // namespace gridtarget
