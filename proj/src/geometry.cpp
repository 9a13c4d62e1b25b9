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

#include "gridtarget/geometry.hpp"

namespace gridtarget {

double ConvexPolygon::area() const {
  double twice = 0.0;
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    twice += cross(vertices[i], vertices[(i + 1) % vertices.size()]);
  }
  return 0.5 * twice;
}

bool ConvexPolygon::contains(Point2d p, double tol) const {
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    const Point2d a = vertices[i];
    const Point2d b = vertices[(i + 1) % vertices.size()];
    const Point2d edge = b - a;
    if (cross(edge, p - a) < -tol * norm(edge)) return false;
  }
  return true;
}

std::vector<Point2d> RotatedRect::corners() const {
  const Point2d u = 0.5 * width * axis_u();
  const Point2d v = 0.5 * height * axis_v();
  return {center - u - v, center + u - v, center + u + v, center - u + v};
}

bool RotatedRect::contains(Point2d p, double tol) const {
  const Point2d d = p - center;
  return std::abs(dot(d, axis_u())) <= 0.5 * width + tol &&
         std::abs(dot(d, axis_v())) <= 0.5 * height + tol;
}

}  // namespace gridtarget
