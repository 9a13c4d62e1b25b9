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

#include "gridtarget/evalmatch.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "gridtarget/error.hpp"

namespace gridtarget {

Region Region::square(Point2d center, double side, RegionSource source) {
  if (!(side > 0.0)) throw ArgumentError("square region needs a positive side");
  Region r;
  r.shape = RegionShape::kSquare;
  r.source = source;
  r.center = center;
  r.extent = side;
  return r;
}

Region Region::circle(Point2d center, double radius, RegionSource source) {
  if (!(radius > 0.0)) throw ArgumentError("circle region needs a positive radius");
  Region r;
  r.shape = RegionShape::kCircle;
  r.source = source;
  r.center = center;
  r.extent = radius;
  return r;
}

Region Region::rotated(const RotatedRect& rect, RegionSource source) {
  if (!(rect.width > 0.0) || !(rect.height > 0.0)) throw ArgumentError("rectangle region needs positive sides");
  Region r;
  r.shape = RegionShape::kRotatedRect;
  r.source = source;
  r.center = rect.center;
  r.rect = rect;
  return r;
}

bool Region::contains(Point2d p) const {
  switch (shape) {
    case RegionShape::kSquare:
      return std::abs(p.x - center.x) <= 0.5 * extent && std::abs(p.y - center.y) <= 0.5 * extent;
    case RegionShape::kCircle: {
      const double dx = p.x - center.x, dy = p.y - center.y;
      return dx * dx + dy * dy <= extent * extent;
    }
    case RegionShape::kRotatedRect:
      return rect.contains(p);
  }
  return false;
}

void MatchReport::finalize() {
  precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  f1 = precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

MatchReport match(const std::vector<Region>& regions, const std::vector<Selection>& sels) {
  std::vector<std::size_t> hits(regions.size(), 0);
  std::vector<std::vector<std::size_t>> containing(sels.size());
  for (std::size_t r = 0; r < regions.size(); ++r) {
    for (std::size_t s = 0; s < sels.size(); ++s) {
      if (regions[r].contains({sels[s].x, sels[s].y})) {
        ++hits[r];
        containing[s].push_back(r);
      }
    }
  }
  MatchReport report;
  for (std::size_t r = 0; r < regions.size(); ++r) {
    if (hits[r] != 1) ++report.fp;
  }
  for (std::size_t s = 0; s < sels.size(); ++s) {
    bool matched = false;
    for (std::size_t r : containing[s]) matched = matched || hits[r] == 1;
    if (matched) {
      ++report.tp;
    } else {
      ++report.fn;
    }
  }
  report.finalize();
  return report;
}

SessionSummary aggregate_sessions(const std::vector<std::pair<std::string, MatchReport>>& reports) {
  if (reports.empty()) throw ArgumentError("no reports to aggregate");
  SessionSummary summary;
  for (const auto& [session, r] : reports) {
    auto& acc = summary.sessions[session];
    acc.tp += r.tp;
    acc.fp += r.fp;
    acc.fn += r.fn;
  }
  for (auto& [session, r] : summary.sessions) {
    r.finalize();
    summary.precision += r.precision;
    summary.recall += r.recall;
    summary.f1 += r.f1;
  }
  const double n = static_cast<double>(summary.sessions.size());
  summary.precision /= n;
  summary.recall /= n;
  summary.f1 /= n;
  return summary;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) {
    while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
    while (!field.empty() && field.front() == ' ') field.erase(field.begin());
    fields.push_back(field);
  }
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_coord(const std::string& text, std::size_t line_no) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size() || !std::isfinite(v)) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw FormatError("selections CSV line " + std::to_string(line_no) + ": bad coordinate '" + text + "'");
  }
}

}  // namespace

std::vector<Selection> read_selections_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<Selection> out;
  int col_image = -1, col_session = -1, col_x = -1, col_y = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv_line(line);
    if (col_image < 0) {
      for (int i = 0; i < static_cast<int>(fields.size()); ++i) {
        if (fields[i] == "image_id") col_image = i;
        if (fields[i] == "session_id") col_session = i;
        if (fields[i] == "x") col_x = i;
        if (fields[i] == "y") col_y = i;
      }
      if (col_image < 0 || col_session < 0 || col_x < 0 || col_y < 0) {
        throw FormatError("selections CSV header must name image_id, session_id, x, y");
      }
      continue;
    }
    const int need = std::max({col_image, col_session, col_x, col_y});
    if (static_cast<int>(fields.size()) <= need) {
      throw FormatError("selections CSV line " + std::to_string(line_no) + ": too few fields");
    }
    out.push_back({parse_coord(fields[col_x], line_no), parse_coord(fields[col_y], line_no), fields[col_image],
                   fields[col_session]});
  }
  if (col_image < 0) throw FormatError("selections CSV is empty");
  return out;
}

std::vector<Selection> load_selections_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open " + path.string());
  return read_selections_csv(in);
}

std::string selections_to_csv(const std::vector<Selection>& sels) {
  std::ostringstream out;
  out.precision(17);
  out << "image_id,session_id,x,y\n";
  for (const auto& s : sels) out << s.image_id << ',' << s.session_id << ',' << s.x << ',' << s.y << '\n';
  return out.str();
}

}  // namespace gridtarget
