// Copyright 2026 The agplan Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef AGPLAN__GEOMETRY_HPP_
#define AGPLAN__GEOMETRY_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace agplan
{

struct Vec2
{
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(Vec2 a, double k) { return {a.x * k, a.y * k}; }
  friend Vec2 operator*(double k, Vec2 a) { return {a.x * k, a.y * k}; }
  friend bool operator==(Vec2 a, Vec2 b) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline Vec2 unit_from_heading(double heading) { return {std::cos(heading), std::sin(heading)}; }

/// Wraps an angle into (-pi, pi].
inline double normalize_angle(double angle)
{
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double a = std::remainder(angle, two_pi);
  if (a <= -std::numbers::pi) {
    a += two_pi;
  }
  return a;
}

struct Pose2D
{
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;

  Vec2 position() const { return {x, y}; }
  friend bool operator==(const Pose2D &, const Pose2D &) = default;
};

/// Rigid body dimensions of an oriented rectangle centered on its pose.
struct Footprint
{
  double length = 4.6;
  double width = 2.0;

  double area() const { return length * width; }
};

/// Counter-clockwise vertex list. Rectangles always have four vertices.
using Polygon = std::vector<Vec2>;

class DegeneratePolygon : public std::invalid_argument
{
public:
  explicit DegeneratePolygon(const std::string & what) : std::invalid_argument(what) {}
};

/// Corners of the rectangle centered at `pose`, counter-clockwise starting at rear-right.
inline Polygon footprint_polygon(const Pose2D & pose, double length, double width)
{
  if (!(length > 0.0) || !(width > 0.0)) {
    throw DegeneratePolygon("footprint dimensions must be positive");
  }
  const double c = std::cos(pose.heading);
  const double s = std::sin(pose.heading);
  const double hl = 0.5 * length;
  const double hw = 0.5 * width;
  const std::array<Vec2, 4> local{{{-hl, -hw}, {hl, -hw}, {hl, hw}, {-hl, hw}}};
  Polygon out;
  out.reserve(4);
  for (const auto & p : local) {
    out.push_back({pose.x + c * p.x - s * p.y, pose.y + s * p.x + c * p.y});
  }
  return out;
}

inline Polygon footprint_polygon(const Pose2D & pose, const Footprint & fp)
{
  return footprint_polygon(pose, fp.length, fp.width);
}

/// Shoelace area; positive for counter-clockwise winding.
inline double signed_area(std::span<const Vec2> poly)
{
  double acc = 0.0;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    acc += cross(poly[i], poly[(i + 1) % n]);
  }
  return 0.5 * acc;
}

inline double polygon_area(std::span<const Vec2> poly) { return std::abs(signed_area(poly)); }

/// Sutherland-Hodgman clip of `subject` against the convex counter-clockwise `clip`.
inline Polygon clip_convex(std::span<const Vec2> subject, std::span<const Vec2> clip)
{
  Polygon output(subject.begin(), subject.end());
  const std::size_t m = clip.size();
  for (std::size_t e = 0; e < m && !output.empty(); ++e) {
    const Vec2 a = clip[e];
    const Vec2 b = clip[(e + 1) % m];
    const Vec2 edge = b - a;
    const Polygon input = std::move(output);
    output.clear();
    const std::size_t n = input.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2 cur = input[i];
      const Vec2 prev = input[(i + n - 1) % n];
      const double d_cur = cross(edge, cur - a);
      const double d_prev = cross(edge, prev - a);
      if (d_cur >= 0.0) {
        if (d_prev < 0.0) {
          const double t = d_prev / (d_prev - d_cur);
          output.push_back(prev + (cur - prev) * t);
        }
        output.push_back(cur);
      } else if (d_prev >= 0.0) {
        const double t = d_prev / (d_prev - d_cur);
        output.push_back(prev + (cur - prev) * t);
      }
    }
  }
  return output;
}

/// Separating axis test for convex polygons. Touching boundaries do not count as overlap.
inline bool convex_polygons_overlap(std::span<const Vec2> a, std::span<const Vec2> b, double eps = 1e-9)
{
  const auto separated_along_edges = [eps](std::span<const Vec2> p, std::span<const Vec2> q) {
    const std::size_t n = p.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2 edge = p[(i + 1) % n] - p[i];
      const Vec2 axis{-edge.y, edge.x};
      double p_min = std::numeric_limits<double>::infinity();
      double p_max = -p_min;
      double q_min = p_min;
      double q_max = -p_min;
      for (const auto & v : p) {
        const double d = dot(axis, v);
        p_min = std::min(p_min, d);
        p_max = std::max(p_max, d);
      }
      for (const auto & v : q) {
        const double d = dot(axis, v);
        q_min = std::min(q_min, d);
        q_max = std::max(q_max, d);
      }
      const double scale = eps * std::max(1.0, norm(axis));
      if (p_max <= q_min + scale || q_max <= p_min + scale) {
        return true;
      }
    }
    return false;
  };
  return !separated_along_edges(a, b) && !separated_along_edges(b, a);
}

/// intersection_area(a, b) / area(a). Both polygons convex and counter-clockwise.
inline double polygon_overlap_ratio(std::span<const Vec2> a, std::span<const Vec2> b)
{
  const double area_a = polygon_area(a);
  if (!(area_a > 0.0)) {
    throw DegeneratePolygon("overlap ratio undefined for zero-area reference polygon");
  }
  if (!convex_polygons_overlap(a, b, 0.0)) {
    return 0.0;
  }
  const Polygon inter = clip_convex(a, b);
  if (inter.size() < 3) {
    return 0.0;
  }
  return std::clamp(polygon_area(inter) / area_a, 0.0, 1.0);
}

inline bool point_in_convex_polygon(Vec2 p, std::span<const Vec2> poly)
{
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (cross(poly[(i + 1) % n] - poly[i], p - poly[i]) < 0.0) {
      return false;
    }
  }
  return true;
}

/// Expresses `p` in the body frame of `pose` (x forward, y left).
inline Vec2 to_local(const Pose2D & pose, Vec2 p)
{
  const Vec2 d = p - pose.position();
  const double c = std::cos(pose.heading);
  const double s = std::sin(pose.heading);
  return {c * d.x + s * d.y, -s * d.x + c * d.y};
}

}  // namespace agplan

#endif  // AGPLAN__GEOMETRY_HPP_
