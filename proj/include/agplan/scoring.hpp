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

#ifndef AGPLAN__SCORING_HPP_
#define AGPLAN__SCORING_HPP_

#include "agplan/dynamics.hpp"
#include "agplan/world_model.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace agplan
{

/// Weights of the performance score and the progress gate threshold.
struct ScoringWeights
{
  double w_comfortable = 2.0;
  double w_progress = 5.0;
  double w_ttc = 7.0;
  double tau = 0.2;

  void validate() const
  {
    if (!(w_comfortable > 0.0) || !(w_progress > 0.0) || !(w_ttc > 0.0)) {
      throw std::invalid_argument("scoring weights must be positive");
    }
    if (!(tau > 0.0) || tau > 1.0) {
      throw std::invalid_argument("progress gate threshold must lie in (0, 1]");
    }
  }
};

/// Per-sample comfort limits (m/s^2, m/s^3, rad/s).
struct ComfortBounds
{
  double min_lon_accel = -4.05;
  double max_lon_accel = 2.40;
  double max_abs_lat_accel = 4.89;
  double max_abs_jerk = 8.37;
  double max_abs_yaw_rate = 0.95;
};

/// Wrong-way distance below `full_below` scores 1, below `half_below` scores 0.5, else 0.
struct DirectionBuckets
{
  double full_below = 2.0;
  double half_below = 6.0;
};

struct ScoringConfig
{
  ScoringWeights weights;
  ComfortBounds comfort;
  DirectionBuckets direction;
  double ttc_horizon = 3.0;
  double min_expected_progress = 1.0;
};

/// Every factor of the multiplicative score, kept separate for explanation.
struct ScoreBreakdown
{
  double s_coll = 1.0;
  double s_driv = 1.0;
  double s_dir = 1.0;
  double g_prog = 1.0;
  double s_perf = 1.0;
  double s_total = 1.0;
  double s_progress = 1.0;
  double s_ttc = 1.0;
  double s_comfort = 1.0;
  double progress_ratio = 1.0;

  double cost() const { return -s_total; }
};

class TrajectoryTooShort : public std::invalid_argument
{
public:
  explicit TrajectoryTooShort(const std::string & what) : std::invalid_argument(what) {}
};

/// Predicted motion of one agent, used by scoring and verification alike.
struct AgentForecast
{
  std::string id;
  Footprint footprint;
  Trajectory trajectory;
};

/// Inputs available to the online scorer: the current ego state, the static map and route, and
/// forecasts. Ground-truth future agent states are deliberately not part of it.
struct ScoringContext
{
  std::shared_ptr<const LaneMap> map;
  std::shared_ptr<const Route> route;
  EgoState ego;
  std::vector<AgentForecast> forecasts;
};

inline std::vector<AgentForecast> forecast_agents(const WorldSnapshot & world, double horizon, double dt)
{
  std::vector<AgentForecast> out;
  out.reserve(world.agents.size());
  for (const auto & agent : world.agents) {
    out.push_back({agent.id, agent.footprint, forecast_constant_velocity(agent, horizon, dt)});
  }
  return out;
}

inline ScoringContext make_scoring_context(const WorldSnapshot & world, double horizon, double dt)
{
  return {world.map, world.route, world.ego, forecast_agents(world, horizon, dt)};
}

namespace detail
{

inline bool bodies_may_touch(const Pose2D & a, const Footprint & fa, const Pose2D & b, const Footprint & fb)
{
  const double ra = 0.5 * std::hypot(fa.length, fa.width);
  const double rb = 0.5 * std::hypot(fb.length, fb.width);
  return norm(a.position() - b.position()) < ra + rb;
}

}  // namespace detail

/// 1 minus the worst overlap ratio (relative to the ego polygon) over all samples and agents.
inline double collision_score(
  const Trajectory & ego_traj, const Footprint & ego_fp, std::span<const AgentForecast> forecasts)
{
  double worst = 0.0;
  for (const auto & sample : ego_traj.samples()) {
    std::optional<Polygon> ego_poly;
    for (const auto & f : forecasts) {
      const auto agent = f.trajectory.sample_at(sample.t);
      if (!detail::bodies_may_touch(sample.pose, ego_fp, agent.pose, f.footprint)) {
        continue;
      }
      if (!ego_poly) {
        ego_poly = footprint_polygon(sample.pose, ego_fp);
      }
      const auto agent_poly = footprint_polygon(agent.pose, f.footprint);
      worst = std::max(worst, polygon_overlap_ratio(*ego_poly, agent_poly));
    }
  }
  return 1.0 - worst;
}

/// Earliest sample time at which the ego polygon overlaps any forecast, if within `horizon`.
inline std::optional<double> first_collision_time(
  const Trajectory & ego_traj, const Footprint & ego_fp, std::span<const AgentForecast> forecasts,
  double horizon)
{
  for (const auto & sample : ego_traj.samples()) {
    if (sample.t > horizon + 1e-9) {
      break;
    }
    for (const auto & f : forecasts) {
      const auto agent = f.trajectory.sample_at(sample.t);
      if (!detail::bodies_may_touch(sample.pose, ego_fp, agent.pose, f.footprint)) {
        continue;
      }
      if (convex_polygons_overlap(
            footprint_polygon(sample.pose, ego_fp), footprint_polygon(agent.pose, f.footprint))) {
        return sample.t;
      }
    }
  }
  return std::nullopt;
}

/// min(t*, horizon) / horizon for the earliest predicted collision t*, 1 if none.
inline double ttc_score(
  const Trajectory & ego_traj, const Footprint & ego_fp, std::span<const AgentForecast> forecasts,
  double horizon = 3.0)
{
  const auto t = first_collision_time(ego_traj, ego_fp, forecasts, horizon);
  if (!t) {
    return 1.0;
  }
  return std::clamp(std::min(*t, horizon) / horizon, 0.0, 1.0);
}

/// Fraction of samples whose ego polygon lies fully inside the drivable area.
inline double drivable_area_score(const Trajectory & ego_traj, const Footprint & ego_fp, const LaneMap & map)
{
  if (ego_traj.empty()) {
    return 1.0;
  }
  std::size_t inside = 0;
  for (const auto & sample : ego_traj.samples()) {
    if (map.contains_polygon(footprint_polygon(sample.pose, ego_fp))) {
      ++inside;
    }
  }
  return static_cast<double>(inside) / static_cast<double>(ego_traj.size());
}

/// Cumulative distance moved against the direction of the lane containing the ego center.
inline double wrong_way_distance(const Trajectory & ego_traj, const LaneMap & map)
{
  double distance = 0.0;
  for (std::size_t i = 0; i + 1 < ego_traj.size(); ++i) {
    const Vec2 a = ego_traj[i].pose.position();
    const Vec2 step = ego_traj[i + 1].pose.position() - a;
    const double ds = norm(step);
    if (ds < 1e-9) {
      continue;
    }
    const auto lane = map.lane_at(a);
    if (!lane) {
      continue;
    }
    const double lane_heading = map.lanes()[lane->lane_index].centerline.heading_at(lane->projection.s);
    if (dot(step, unit_from_heading(lane_heading)) < 0.0) {
      distance += ds;
    }
  }
  return distance;
}

inline double direction_score_from_distance(double wrong_way, const DirectionBuckets & buckets = {})
{
  if (wrong_way < buckets.full_below) {
    return 1.0;
  }
  if (wrong_way < buckets.half_below) {
    return 0.5;
  }
  return 0.0;
}

inline double driving_direction_score(
  const Trajectory & ego_traj, const LaneMap & map, const DirectionBuckets & buckets = {})
{
  return direction_score_from_distance(wrong_way_distance(ego_traj, map), buckets);
}

/// min(ratio / tau, 1) with ratio = progress / expected. A non-positive expectation means nothing
/// is expected to move and the gate is open.
inline double progress_gate(double progress, double expected, double tau)
{
  if (!(expected > 0.0)) {
    return 1.0;
  }
  const double ratio = progress / expected;
  return std::clamp(ratio / tau, 0.0, 1.0);
}

/// Arc length gained along the route between the first and last trajectory sample.
inline double route_progress(const Trajectory & ego_traj, const Route & route)
{
  if (ego_traj.empty()) {
    return 0.0;
  }
  return project_to_route(route, ego_traj.back().pose).arc_length -
         project_to_route(route, ego_traj.front().pose).arc_length;
}

/// Distance the ego is expected to cover: current speed times horizon, floored at
/// `min_expected`, capped by the remaining route. Zero once less than `min_expected` remains.
inline double expected_progress(
  double speed, double horizon, double remaining_route, double min_expected = 1.0)
{
  if (remaining_route < min_expected) {
    return 0.0;
  }
  return std::min(std::max(speed * horizon, min_expected), remaining_route);
}

namespace detail
{

template <typename Getter>
std::vector<double> gradient(std::size_t n, double dt, Getter get)
{
  std::vector<double> out(n, 0.0);
  if (n < 2) {
    return out;
  }
  out.front() = get(1, 0) / dt;
  out.back() = get(n - 1, n - 2) / dt;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    out[i] = get(i + 1, i - 1) / (2.0 * dt);
  }
  return out;
}

}  // namespace detail

/// Fraction of samples satisfying every comfort bound. Yaw rate and jerk come from finite
/// differences of heading and longitudinal acceleration.
inline double comfort_score(const Trajectory & ego_traj, const ComfortBounds & bounds = {})
{
  const std::size_t n = ego_traj.size();
  if (n < 3) {
    throw TrajectoryTooShort("comfort score needs at least 3 samples");
  }
  const double dt = ego_traj.dt();
  const auto & s = ego_traj.samples();
  const auto yaw_rate = detail::gradient(n, dt, [&s](std::size_t i, std::size_t j) {
    return normalize_angle(s[i].pose.heading - s[j].pose.heading);
  });
  const auto jerk = detail::gradient(
    n, dt, [&s](std::size_t i, std::size_t j) { return s[i].acceleration - s[j].acceleration; });
  constexpr double tol = 1e-9;
  std::size_t ok = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double lon = s[i].acceleration;
    const double lat = s[i].speed * yaw_rate[i];
    const bool pass = lon >= bounds.min_lon_accel - tol && lon <= bounds.max_lon_accel + tol &&
                      std::abs(lat) <= bounds.max_abs_lat_accel + tol &&
                      std::abs(jerk[i]) <= bounds.max_abs_jerk + tol &&
                      std::abs(yaw_rate[i]) <= bounds.max_abs_yaw_rate + tol;
    if (pass) {
      ++ok;
    }
  }
  return static_cast<double>(ok) / static_cast<double>(n);
}

/// Weighted mean of the progress, time-to-collision and comfort sub-scores.
inline double performance_score(double s_progress, double s_ttc, double s_comfort, const ScoringWeights & w)
{
  return (w.w_progress * s_progress + w.w_ttc * s_ttc + w.w_comfortable * s_comfort) /
         (w.w_progress + w.w_ttc + w.w_comfortable);
}

struct TotalScore
{
  double s_total = 0.0;
  double cost = 0.0;
};

/// Safety gate times progress gate times performance; cost is the negated score.
inline TotalScore total_score(double s_coll, double s_driv, double s_dir, double g_prog, double s_perf)
{
  const double s = s_coll * s_driv * s_dir * g_prog * s_perf;
  return {s, -s};
}

inline TotalScore total_score(const ScoreBreakdown & b)
{
  return total_score(b.s_coll, b.s_driv, b.s_dir, b.g_prog, b.s_perf);
}

/// Scores one candidate using only the current state, the map and the agent forecasts.
inline ScoreBreakdown score_trajectory(
  const Trajectory & traj, const ScoringContext & ctx, const ScoringConfig & cfg = {})
{
  ScoreBreakdown b;
  const Footprint & fp = ctx.ego.footprint;
  b.s_coll = collision_score(traj, fp, ctx.forecasts);
  b.s_driv = drivable_area_score(traj, fp, *ctx.map);
  b.s_dir = driving_direction_score(traj, *ctx.map, cfg.direction);

  const double progress = route_progress(traj, *ctx.route);
  const double s_now = project_to_route(*ctx.route, ctx.ego.pose).arc_length;
  const double expected = expected_progress(
    ctx.ego.speed, traj.horizon(), ctx.route->length() - s_now, cfg.min_expected_progress);
  b.progress_ratio = expected > 0.0 ? progress / expected : 1.0;
  b.g_prog = progress_gate(progress, expected, cfg.weights.tau);
  b.s_progress = std::clamp(b.progress_ratio, 0.0, 1.0);

  b.s_ttc = ttc_score(traj, fp, ctx.forecasts, cfg.ttc_horizon);
  b.s_comfort = comfort_score(traj, cfg.comfort);
  b.s_perf = performance_score(b.s_progress, b.s_ttc, b.s_comfort, cfg.weights);
  b.s_total = total_score(b).s_total;
  return b;
}

}  // namespace agplan

#endif  // AGPLAN__SCORING_HPP_
