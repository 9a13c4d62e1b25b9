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

#include <cmath>
#include <numbers>
#include <vector>

namespace gridtarget {

struct Point2d {
  double x = 0.0;
  double y = 0.0;

  friend Point2d operator+(Point2d a, Point2d b) { return {a.x + b.x, a.y + b.y}; }
  friend Point2d operator-(Point2d a, Point2d b) { return {a.x - b.x, a.y - b.y}; }
  friend Point2d operator*(double s, Point2d a) { return {s * a.x, s * a.y}; }
  friend bool operator==(Point2d a, Point2d b) = default;
  friend auto operator<=>(Point2d a, Point2d b) = default;
};

inline double dot(Point2d a, Point2d b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point2d a, Point2d b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point2d a) { return std::hypot(a.x, a.y); }
inline double distance(Point2d a, Point2d b) { return norm(a - b); }
// Counter-clockwise quarter turn.
inline Point2d perp(Point2d a) { return {-a.y, a.x}; }

inline double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / std::numbers::pi; }

// Vertices in counter-clockwise order, strictly convex, at least three.
struct ConvexPolygon {
  std::vector<Point2d> vertices;

  double area() const;
  // Closed containment with an absolute tolerance in pixels.
  bool contains(Point2d p, double tol = 1e-9) const;
};

// Rectangle whose width runs along (cos theta, sin theta) and height along
// the perpendicular. theta is in degrees.
struct RotatedRect {
  Point2d center;
  double width = 0.0;
  double height = 0.0;
  double theta = 0.0;

  double area() const { return width * height; }
  Point2d axis_u() const { return {std::cos(deg2rad(theta)), std::sin(deg2rad(theta))}; }
  Point2d axis_v() const { return perp(axis_u()); }
  std::vector<Point2d> corners() const;
  bool contains(Point2d p, double tol = 0.0) const;
};

}  // namespace gridtarget
