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

#ifndef AGPLAN__WORLD_MODEL_HPP_
#define AGPLAN__WORLD_MODEL_HPP_

#include "agplan/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace agplan
{

class InvalidGeometry : public std::invalid_argument
{
public:
  explicit InvalidGeometry(const std::string & what) : std::invalid_argument(what) {}
};

/// Arc-length parameterized polyline. Consecutive points must be distinct.
class Polyline
{
public:
  struct Projection
  {
    double s = 0.0;
    double lateral = 0.0;   // signed, left of the tangent is positive
    double distance = 0.0;  // euclidean distance to the closest point
    double along = 0.0;     // tangential residual, nonzero only when clamped at an end or a vertex
    std::size_t segment = 0;
  };

  Polyline() = default;

  explicit Polyline(std::vector<Vec2> points) : points_(std::move(points))
  {
    if (points_.size() < 2) {
      throw InvalidGeometry("polyline needs at least two points");
    }
    arc_.resize(points_.size(), 0.0);
    min_ = max_ = points_.front();
    for (std::size_t i = 1; i < points_.size(); ++i) {
      const double len = norm(points_[i] - points_[i - 1]);
      if (!(len > 1e-9)) {
        throw InvalidGeometry("polyline arc length must be strictly increasing");
      }
      arc_[i] = arc_[i - 1] + len;
      min_ = {std::min(min_.x, points_[i].x), std::min(min_.y, points_[i].y)};
      max_ = {std::max(max_.x, points_[i].x), std::max(max_.y, points_[i].y)};
    }
  }

  const std::vector<Vec2> & points() const { return points_; }
  const std::vector<double> & arc_lengths() const { return arc_; }
  double length() const { return arc_.empty() ? 0.0 : arc_.back(); }
  bool empty() const { return points_.empty(); }
  Vec2 bbox_min() const { return min_; }
  Vec2 bbox_max() const { return max_; }

  Projection project(Vec2 p) const
  {
    Projection best;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < points_.size(); ++i) {
      const Vec2 a = points_[i];
      const Vec2 d = points_[i + 1] - a;
      const double len2 = dot(d, d);
      const double u = std::clamp(dot(p - a, d) / len2, 0.0, 1.0);
      const Vec2 q = a + d * u;
      const Vec2 r = p - q;
      const double d2 = dot(r, r);
      if (d2 < best_d2) {
        best_d2 = d2;
        const double len = std::sqrt(len2);
        const Vec2 tangent = d * (1.0 / len);
        best.s = arc_[i] + u * len;
        best.lateral = cross(tangent, r);
        best.along = dot(tangent, r);
        best.segment = i;
      }
    }
    best.distance = std::sqrt(best_d2);
    return best;
  }

  std::size_t segment_at(double s) const
  {
    const auto it = std::upper_bound(arc_.begin(), arc_.end(), s);
    const auto idx = static_cast<std::size_t>(std::distance(arc_.begin(), it));
    if (idx == 0) {
      return 0;
    }
    return std::min(idx - 1, points_.size() - 2);
  }

  /// Linear in s; extrapolates along the end tangents outside [0, length].
  Vec2 point_at(double s) const
  {
    const std::size_t i = segment_at(s);
    const Vec2 a = points_[i];
    const Vec2 d = points_[i + 1] - a;
    const double len = arc_[i + 1] - arc_[i];
    return a + d * ((s - arc_[i]) / len);
  }

  double heading_at(double s) const
  {
    const std::size_t i = segment_at(s);
    const Vec2 d = points_[i + 1] - points_[i];
    return std::atan2(d.y, d.x);
  }

  /// Heading blended linearly across each vertex over +-`blend` meters, so offsets of the
  /// polyline have no kinks.
  double smooth_heading_at(double s, double blend) const
  {
    const std::size_t i = segment_at(s);
    const double h = heading_at(s);
    if (blend <= 0.0) {
      return h;
    }
    if (i + 1 < points_.size() - 1 && arc_[i + 1] - s < blend) {
      const double next = heading_at(arc_[i + 1] + 1e-9);
      const double w = 0.5 * (1.0 - (arc_[i + 1] - s) / blend);
      return normalize_angle(h + w * normalize_angle(next - h));
    }
    if (i > 0 && s - arc_[i] < blend) {
      const double prev = heading_at(arc_[i] - 1e-9);
      const double w = 0.5 * (1.0 - (s - arc_[i]) / blend);
      return normalize_angle(h + w * normalize_angle(prev - h));
    }
    return h;
  }

  /// Point offset laterally (left positive) from the blended tangent at s.
  Vec2 offset_point_at(double s, double offset, double blend = 2.0) const
  {
    const double h = smooth_heading_at(s, blend);
    return point_at(s) + Vec2{-std::sin(h), std::cos(h)} * offset;
  }

private:
  std::vector<Vec2> points_;
  std::vector<double> arc_;
  Vec2 min_{};
  Vec2 max_{};
};

struct Lane
{
  std::string id;
  Polyline centerline;
  double width = 3.5;
  double speed_limit = 13.89;

  bool contains(Vec2 p, double eps = 1e-9) const
  {
    const Vec2 lo = centerline.bbox_min();
    const Vec2 hi = centerline.bbox_max();
    const double r = 0.5 * width + eps;
    if (p.x < lo.x - r || p.x > hi.x + r || p.y < lo.y - r || p.y > hi.y + r) {
      return false;
    }
    return contains(centerline.project(p), eps);
  }

  bool contains(const Polyline::Projection & proj, double eps = 1e-9) const
  {
    if (proj.distance > 0.5 * width + eps) {
      return false;
    }
    if (proj.s <= 0.0 && proj.along < -eps) {
      return false;
    }
    if (proj.s >= centerline.length() && proj.along > eps) {
      return false;
    }
    return true;
  }
};

/// Lanes plus the drivable area, which is the union of all lane corridors.
class LaneMap
{
public:
  struct LaneQuery
  {
    std::size_t lane_index = 0;
    Polyline::Projection projection;
  };

  LaneMap() = default;

  explicit LaneMap(std::vector<Lane> lanes) : lanes_(std::move(lanes))
  {
    std::set<std::string> ids;
    for (const auto & lane : lanes_) {
      if (!(lane.width > 0.0)) {
        throw InvalidGeometry("lane '" + lane.id + "' must have positive width");
      }
      if (lane.centerline.empty()) {
        throw InvalidGeometry("lane '" + lane.id + "' has no centerline");
      }
      if (!ids.insert(lane.id).second) {
        throw InvalidGeometry("duplicate lane id '" + lane.id + "'");
      }
    }
  }

  const std::vector<Lane> & lanes() const { return lanes_; }

  const Lane * find(const std::string & id) const
  {
    for (const auto & lane : lanes_) {
      if (lane.id == id) {
        return &lane;
      }
    }
    return nullptr;
  }

  /// Lane whose corridor contains `p` with the smallest |lateral| offset.
  std::optional<LaneQuery> lane_at(Vec2 p) const
  {
    std::optional<LaneQuery> best;
    for (std::size_t i = 0; i < lanes_.size(); ++i) {
      const Lane & lane = lanes_[i];
      const Vec2 lo = lane.centerline.bbox_min();
      const Vec2 hi = lane.centerline.bbox_max();
      const double r = 0.5 * lane.width;
      if (p.x < lo.x - r || p.x > hi.x + r || p.y < lo.y - r || p.y > hi.y + r) {
        continue;
      }
      const auto proj = lane.centerline.project(p);
      if (!lane.contains(proj)) {
        continue;
      }
      if (!best || std::abs(proj.lateral) < std::abs(best->projection.lateral)) {
        best = LaneQuery{i, proj};
      }
    }
    return best;
  }

  bool contains_point(Vec2 p) const
  {
    return std::any_of(lanes_.begin(), lanes_.end(), [p](const Lane & l) { return l.contains(p); });
  }

  /// True when the convex polygon lies inside the drivable area. A polygon whose corners all
  /// sit over one straight lane segment is decided exactly; otherwise the boundary is sampled
  /// at `spacing` meters.
  bool contains_polygon(std::span<const Vec2> poly, double spacing = 0.5) const
  {
    for (const auto & lane : lanes_) {
      bool all_on_segment = true;
      std::optional<std::size_t> segment;
      for (const auto & v : poly) {
        const auto proj = lane.centerline.project(v);
        if (std::abs(proj.along) > 1e-9 || std::abs(proj.lateral) > 0.5 * lane.width + 1e-9 ||
            (segment && *segment != proj.segment)) {
          all_on_segment = false;
          break;
        }
        segment = proj.segment;
      }
      if (all_on_segment) {
        return true;
      }
    }
    return for_each_boundary_sample(poly, spacing, [this](Vec2 p) { return contains_point(p); });
  }

  /// True when no part of the polygon boundary (sampled) or center touches the drivable area.
  bool polygon_fully_outside(std::span<const Vec2> poly, double spacing = 0.5) const
  {
    Vec2 center{};
    for (const auto & v : poly) {
      center = center + v * (1.0 / static_cast<double>(poly.size()));
    }
    if (contains_point(center)) {
      return false;
    }
    return for_each_boundary_sample(poly, spacing, [this](Vec2 p) { return !contains_point(p); });
  }

private:
  template <typename Pred>
  static bool for_each_boundary_sample(std::span<const Vec2> poly, double spacing, Pred pred)
  {
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2 a = poly[i];
      const Vec2 b = poly[(i + 1) % n];
      const int steps = std::max(1, static_cast<int>(std::ceil(norm(b - a) / spacing)));
      for (int k = 0; k < steps; ++k) {
        if (!pred(a + (b - a) * (static_cast<double>(k) / steps))) {
          return false;
        }
      }
    }
    return true;
  }

  std::vector<Lane> lanes_;
};

class BrokenRoute : public std::invalid_argument
{
public:
  explicit BrokenRoute(const std::string & what) : std::invalid_argument(what) {}
};

/// Ordered lane sequence with a concatenated centerline.
class Route
{
public:
  static constexpr double kConnectivityTolerance = 0.1;

  Route() = default;

  Route(const LaneMap & map, std::vector<std::string> lane_ids) : lane_ids_(std::move(lane_ids))
  {
    if (lane_ids_.empty()) {
      throw BrokenRoute("route has no lanes");
    }
    std::vector<Vec2> pts;
    std::vector<std::size_t> first_index;
    for (std::size_t i = 0; i < lane_ids_.size(); ++i) {
      const Lane * lane = map.find(lane_ids_[i]);
      if (lane == nullptr) {
        throw BrokenRoute("route references unknown lane '" + lane_ids_[i] + "'");
      }
      const auto & lp = lane->centerline.points();
      std::size_t skip = 0;
      if (!pts.empty()) {
        const double gap = norm(lp.front() - pts.back());
        if (gap > kConnectivityTolerance) {
          throw BrokenRoute(
            "lane '" + lane_ids_[i - 1] + "' does not connect to '" + lane_ids_[i] + "'");
        }
        if (gap <= 1e-9) {
          skip = 1;
        }
      }
      first_index.push_back(pts.size() - skip);
      speed_limits_.push_back(lane->speed_limit);
      pts.insert(pts.end(), lp.begin() + static_cast<std::ptrdiff_t>(skip), lp.end());
    }
    centerline_ = Polyline(std::move(pts));
    for (const auto idx : first_index) {
      starts_.push_back(centerline_.arc_lengths()[idx]);
    }
  }

  bool empty() const { return centerline_.empty(); }
  const std::vector<std::string> & lane_ids() const { return lane_ids_; }
  const Polyline & centerline() const { return centerline_; }
  double length() const { return centerline_.length(); }

  double speed_limit_at(double s) const
  {
    std::size_t idx = 0;
    for (std::size_t i = 0; i < starts_.size(); ++i) {
      if (s >= starts_[i]) {
        idx = i;
      }
    }
    return speed_limits_.at(idx);
  }

private:
  std::vector<std::string> lane_ids_;
  Polyline centerline_;
  std::vector<double> starts_;
  std::vector<double> speed_limits_;
};

struct RouteProjection
{
  double arc_length = 0.0;
  double lateral_offset = 0.0;
};

/// Closest centerline point (clamped to the route ends) and signed lateral offset, left positive.
inline RouteProjection project_to_route(const Route & route, const Pose2D & point)
{
  if (route.empty()) {
    throw BrokenRoute("cannot project onto an empty route");
  }
  const auto proj = route.centerline().project(point.position());
  return {proj.s, proj.lateral};
}

struct EgoState
{
  Pose2D pose;
  double speed = 0.0;
  double acceleration = 0.0;
  double steering_angle = 0.0;
  Footprint footprint;
};

enum class AgentPolicy { scripted, constant_velocity, idm_reactive };

struct Agent
{
  std::string id;
  Pose2D pose;
  double speed = 0.0;
  Footprint footprint;
  AgentPolicy policy = AgentPolicy::scripted;
};

enum class SimMode { reactive, non_reactive };

class InvalidTrajectory : public std::invalid_argument
{
public:
  explicit InvalidTrajectory(const std::string & what) : std::invalid_argument(what) {}
};

struct TrajectorySample
{
  double t = 0.0;
  Pose2D pose;
  double speed = 0.0;
  double acceleration = 0.0;
};

/// Uniformly sampled ego motion starting at t = 0. The command type flowing through the graph.
class Trajectory
{
public:
  Trajectory() = default;

  Trajectory(double dt, std::vector<TrajectorySample> samples) : dt_(dt), samples_(std::move(samples))
  {
    if (!(dt_ > 0.0)) {
      throw InvalidTrajectory("trajectory dt must be positive");
    }
    if (samples_.empty()) {
      throw InvalidTrajectory("trajectory needs at least one sample");
    }
    for (std::size_t i = 0; i < samples_.size(); ++i) {
      if (std::abs(samples_[i].t - static_cast<double>(i) * dt_) > 1e-6) {
        throw InvalidTrajectory("trajectory samples must be uniformly spaced from t = 0");
      }
    }
  }

  double dt() const { return dt_; }
  double horizon() const { return samples_.empty() ? 0.0 : static_cast<double>(samples_.size() - 1) * dt_; }
  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  const std::vector<TrajectorySample> & samples() const { return samples_; }
  const TrajectorySample & operator[](std::size_t i) const { return samples_[i]; }
  const TrajectorySample & front() const { return samples_.front(); }
  const TrajectorySample & back() const { return samples_.back(); }

  /// Linear interpolation, clamped to the first and last samples.
  TrajectorySample sample_at(double t) const
  {
    if (t <= 0.0) {
      return samples_.front();
    }
    const double pos = t / dt_;
    const auto i = static_cast<std::size_t>(std::floor(pos));
    if (i + 1 >= samples_.size()) {
      return samples_.back();
    }
    const double w = pos - static_cast<double>(i);
    const auto & a = samples_[i];
    const auto & b = samples_[i + 1];
    TrajectorySample out;
    out.t = t;
    out.pose.x = a.pose.x + w * (b.pose.x - a.pose.x);
    out.pose.y = a.pose.y + w * (b.pose.y - a.pose.y);
    out.pose.heading = normalize_angle(a.pose.heading + w * normalize_angle(b.pose.heading - a.pose.heading));
    out.speed = a.speed + w * (b.speed - a.speed);
    out.acceleration = a.acceleration + w * (b.acceleration - a.acceleration);
    return out;
  }

private:
  double dt_ = 0.1;
  std::vector<TrajectorySample> samples_;
};

/// Everything a behavior, verifier or scorer may read at one tick.
struct WorldSnapshot
{
  std::size_t tick = 0;
  double time = 0.0;
  EgoState ego;
  std::vector<Agent> agents;
  std::shared_ptr<const LaneMap> map;
  std::shared_ptr<const Route> route;
  SimMode mode = SimMode::reactive;
};

}  // namespace agplan

#endif  // AGPLAN__WORLD_MODEL_HPP_
