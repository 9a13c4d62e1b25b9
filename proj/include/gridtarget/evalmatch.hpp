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
#include <filesystem>
#include <istream>
#include <map>
#include <string>
#include <vector>

#include "gridtarget/geometry.hpp"

namespace gridtarget {

enum class RegionShape { kSquare, kCircle, kRotatedRect };
enum class RegionSource { kLatticeCrop, kCentroidCircle, kSquareRect };

// A predicted collection region. Containment is closed: boundary points are
// inside.
struct Region {
  RegionShape shape = RegionShape::kSquare;
  RegionSource source = RegionSource::kLatticeCrop;
  Point2d center;
  double extent = 0.0;  // side for squares, radius for circles
  RotatedRect rect;     // used when shape == kRotatedRect

  static Region square(Point2d center, double side, RegionSource source = RegionSource::kLatticeCrop);
  static Region circle(Point2d center, double radius, RegionSource source = RegionSource::kCentroidCircle);
  static Region rotated(const RotatedRect& r, RegionSource source = RegionSource::kSquareRect);

  bool contains(Point2d p) const;
};

struct Selection {
  double x = 0.0;
  double y = 0.0;
  std::string image_id;
  std::string session_id;
};

struct MatchReport {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  // Recomputes precision, recall and F1 from the counts; zero denominators
  // give 0.
  void finalize();
};

// One-to-one matching for a single image:
//  - a selection is a true positive when some region containing it contains
//    no other selection;
//  - a region containing zero or several selections is a false positive;
//  - every other selection is a false negative.
MatchReport match(const std::vector<Region>& regions, const std::vector<Selection>& sels);

struct SessionSummary {
  std::map<std::string, MatchReport> sessions;  // counts summed per session
  double precision = 0.0;  // unweighted means over sessions
  double recall = 0.0;
  double f1 = 0.0;
};

SessionSummary aggregate_sessions(const std::vector<std::pair<std::string, MatchReport>>& reports);

// CSV with header image_id,session_id,x,y.
std::vector<Selection> read_selections_csv(std::istream& in);
std::vector<Selection> load_selections_csv(const std::filesystem::path& path);
std::string selections_to_csv(const std::vector<Selection>& sels);

}  // namespace gridtarget
