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
#include <istream>
#include <map>
#include <optional>
#include <string>

#include "gridtarget/lattice.hpp"
#include "gridtarget/squares.hpp"

namespace gridtarget {

// Every pipeline tunable. Loaded from a flat key=value file; CLI flags
// override file values, which override these defaults.
struct PipelineConfig {
  double em_tol = 1e-6;
  int em_max_iters = 100;
  int connectivity = 4;
  std::size_t min_component_size = 0;  // 0: 0.05% of image pixels
  std::size_t knn = 6;
  double w_fp = 1.0;
  double w_fn = 2.0;
  double centroid_threshold = 0.5;
  std::size_t min_region = 4;
  double min_spacing = 4.0;
  double crop_margin = 60.0;
  std::optional<double> prob_threshold;   // "none" disables
  std::optional<double> render_radius;    // "auto" uses max(3, round(d/8))
  double centroid_radius = 50.0;
  std::uint64_t seed = 0;
  int jobs = 0;
  int trees = 100;
  int max_depth = 0;
  int logreg_epochs = 20000;
  double logreg_lr = 0.5;

  // Throws ArgumentError naming the first field outside its domain.
  void validate() const;

  SquareDetectionOptions square_options() const;
  LatticeFitParams lattice_params() const;
};

// Throws ArgumentError for unknown keys or unparsable values.
void apply_setting(PipelineConfig& cfg, const std::string& key, const std::string& value);

// Lines are key=value; blank lines and lines starting with '#' are skipped.
void apply_config_stream(PipelineConfig& cfg, std::istream& in);
void apply_config_file(PipelineConfig& cfg, const std::filesystem::path& path);

std::map<std::string, std::string> config_to_map(const PipelineConfig& cfg);

}  // namespace gridtarget
