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

#ifndef AGPLAN__DYNAMICS_HPP_
#define AGPLAN__DYNAMICS_HPP_

#include "agplan/world_model.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

namespace agplan
{

/// Simulation tick used throughout the simulator and planners.
inline constexpr double kDefaultDt = 0.1;
/// Horizon of proposals generated by the planners.
inline constexpr double kDefaultPlanningHorizon = 8.0;

struct BicycleParams
{
  double wheelbase = 3.089;
  double max_steering = 0.6;
  double max_accel = 3.0;
  double max_decel = 8.0;  // positive magnitude

  void validate() const
  {
    if (!(wheelbase > 0.0) || !(max_steering > 0.0) || !(max_accel > 0.0) || !(max_decel > 0.0)) {
      throw std::invalid_argument("bicycle parameters must be positive");
    }
    if (!(max_steering < 0.5 * std::numbers::pi)) {
      throw std::invalid_argument("max_steering must be below pi/2");
    }
  }
};

struct IDMParams
{
  double v0 = 13.89;       // desired speed
  double T = 1.5;          // time headway
  double s0 = 2.0;         // minimum gap
  double a_max = 1.5;
  double b_comf = 2.0;
  double delta = 4.0;
  double max_braking = 8.0;  // lower clamp of the returned acceleration, positive magnitude

  void validate() const
  {
    if (!(v0 > 0.0) || !(T > 0.0) || !(s0 > 0.0) || !(a_max > 0.0) || !(b_comf > 0.0) ||
        !(max_braking > 0.0)) {
      throw std::invalid_argument("IDM parameters must be positive");
    }
    if (!(delta >= 1.0)) {
      throw std::invalid_argument("IDM exponent must be >= 1");
    }
  }
};

/// Forward kinematic bicycle step about the rear axle with midpoint heading integration.
/// Inputs are clamped to the parameter limits and speed never becomes negative.
inline EgoState bicycle_step(
  const EgoState & state, double accel, double steering, double dt, const BicycleParams & params)
{
  if (!(dt > 0.0)) {
    throw std::invalid_argument("bicycle_step requires dt > 0");
  }
  const double a = std::clamp(accel, -params.max_decel, params.max_accel);
  const double delta = std::clamp(steering, -params.max_steering, params.max_steering);
  const double v = state.speed;

  const double yaw_delta = v * std::tan(delta) / params.wheelbase * dt;
  const double mid_heading = state.pose.heading + 0.5 * yaw_delta;

  EgoState next = state;
  next.pose.x = state.pose.x + v * std::cos(mid_heading) * dt;
  next.pose.y = state.pose.y + v * std::sin(mid_heading) * dt;
  next.pose.heading = normalize_angle(state.pose.heading + yaw_delta);
  next.speed = std::max(0.0, v + a * dt);
  next.acceleration = (next.speed - v) / dt;
  next.steering_angle = delta;
  return next;
}

/// Gains of the trajectory tracking controller.
///
/// Longitudinal: a = k_speed * (v_ref(t + dt) - v) / dt. With k_speed = 1 the reference speed
/// of the next sample is reached in one step unless the actuator limits clamp it.
///
/// Lateral: steer = atan(wheelbase * kappa_la) + k_heading * e_heading - k_lateral * e_lateral,
/// where e_lateral is the signed offset of the ego from the reference path (left positive),
/// e_heading the reference path heading minus the ego heading at the projection, and
/// kappa_la the reference curvature `lookahead_time` seconds ahead of the projection.
/// With the defaults the linearized lateral loop is slightly overdamped
/// (zeta = k_heading / (2 sqrt(k_lateral * wheelbase)) ~ 1.08).
struct TrackingGains
{
  double k_speed = 1.0;
  double k_heading = 1.2;
  double k_lateral = 0.1;
  double lookahead_time = 0.3;
};

namespace detail
{

struct PathProjection
{
  double lateral = 0.0;
  double heading = 0.0;
  double time = 0.0;
  bool valid = false;
};

/// Projects a position onto the trajectory path, restricted to a time window around `t_now`.
inline PathProjection project_onto_trajectory(const Trajectory & traj, Vec2 p, double t_now)
{
  PathProjection out;
  const auto n = traj.size();
  if (n < 2) {
    return out;
  }
  const double dt = traj.dt();
  const auto lo = static_cast<std::size_t>(std::max(0.0, std::floor((t_now - 1.0) / dt)));
  const auto hi = std::min(n - 1, static_cast<std::size_t>(std::ceil((t_now + 3.0) / dt)));
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = lo; i < hi; ++i) {
    const Vec2 a = traj[i].pose.position();
    const Vec2 d = traj[i + 1].pose.position() - a;
    const double len2 = dot(d, d);
    if (len2 < 1e-12) {
      continue;
    }
    const double u = std::clamp(dot(p - a, d) / len2, 0.0, 1.0);
    const Vec2 q = a + d * u;
    const double d2 = dot(p - q, p - q);
    if (d2 < best) {
      best = d2;
      const Vec2 tangent = d * (1.0 / std::sqrt(len2));
      out.lateral = cross(tangent, p - q);
      out.heading = std::atan2(d.y, d.x);
      out.time = (static_cast<double>(i) + u) * dt;
      out.valid = true;
    }
  }
  return out;
}

inline double trajectory_curvature_at(const Trajectory & traj, double t)
{
  const auto n = traj.size();
  if (n < 2) {
    return 0.0;
  }
  const auto i = std::min(n - 2, static_cast<std::size_t>(std::max(0.0, std::floor(t / traj.dt()))));
  const double ds = norm(traj[i + 1].pose.position() - traj[i].pose.position());
  if (ds < 1e-3) {
    return 0.0;
  }
  return normalize_angle(traj[i + 1].pose.heading - traj[i].pose.heading) / ds;
}

}  // namespace detail

/// One closed-loop step tracking `traj`, where `t_now` is the current time along the trajectory.
inline EgoState track_trajectory(
  const EgoState & state, const Trajectory & traj, double dt, const BicycleParams & params,
  double t_now = 0.0, const TrackingGains & gains = {})
{
  if (traj.empty()) {
    throw InvalidTrajectory("cannot track an empty trajectory");
  }
  const double v_ref = traj.sample_at(t_now + dt).speed;
  const double accel = gains.k_speed * (v_ref - state.speed) / dt;

  double steering = 0.0;
  const auto proj = detail::project_onto_trajectory(traj, state.pose.position(), t_now);
  if (proj.valid) {
    const double kappa =
      detail::trajectory_curvature_at(traj, proj.time + gains.lookahead_time);
    steering = std::atan(params.wheelbase * kappa) +
               gains.k_heading * normalize_angle(proj.heading - state.pose.heading) -
               gains.k_lateral * proj.lateral;
  } else {
    steering = gains.k_heading * normalize_angle(traj.sample_at(t_now).pose.heading - state.pose.heading);
  }
  return bicycle_step(state, accel, steering, dt, params);
}

/// Closed-loop rollout of the tracking controller along `reference`, sampled at its dt.
/// The first sample is the initial state.
inline Trajectory simulate_tracking(
  const EgoState & initial, const Trajectory & reference, const BicycleParams & params,
  const TrackingGains & gains = {})
{
  const double dt = reference.dt();
  std::vector<TrajectorySample> samples;
  samples.reserve(reference.size());
  EgoState state = initial;
  samples.push_back({0.0, state.pose, state.speed, state.acceleration});
  for (std::size_t k = 1; k < reference.size(); ++k) {
    state = track_trajectory(state, reference, dt, params, static_cast<double>(k - 1) * dt, gains);
    samples.push_back({static_cast<double>(k) * dt, state.pose, state.speed, state.acceleration});
  }
  return Trajectory(dt, std::move(samples));
}

/// Straight-line extrapolation at the agent's current speed and heading.
inline Trajectory forecast_constant_velocity(const Agent & agent, double horizon, double dt)
{
  if (!(horizon > 0.0) || !(dt > 0.0)) {
    throw std::invalid_argument("forecast horizon and dt must be positive");
  }
  const auto steps = static_cast<std::size_t>(std::llround(horizon / dt));
  const Vec2 dir = unit_from_heading(agent.pose.heading);
  std::vector<TrajectorySample> samples;
  samples.reserve(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    Pose2D pose = agent.pose;
    pose.x += dir.x * agent.speed * t;
    pose.y += dir.y * agent.speed * t;
    samples.push_back({t, pose, agent.speed, 0.0});
  }
  return Trajectory(dt, std::move(samples));
}

/// Intelligent Driver Model acceleration, clamped to [-max_braking, a_max].
/// A non-positive gap is treated as an imminent collision and returns maximum braking.
/// Pass an infinite gap for a free road.
inline double idm_accel(double v, double v_lead, double gap, const IDMParams & p)
{
  if (!(gap > 0.0)) {
    return -p.max_braking;
  }
  const double dynamic = v * p.T + v * (v - v_lead) / (2.0 * std::sqrt(p.a_max * p.b_comf));
  const double s_star = p.s0 + std::max(0.0, dynamic);
  const double free_term = std::pow(std::max(v, 0.0) / p.v0, p.delta);
  const double interaction = std::isinf(gap) ? 0.0 : (s_star / gap) * (s_star / gap);
  const double a = p.a_max * (1.0 - free_term - interaction);
  return std::clamp(a, -p.max_braking, p.a_max);
}

/// An object that may block motion along a path.
struct PathObstacle
{
  Pose2D pose;
  double speed = 0.0;
  Footprint footprint;
};

struct LeaderInfo
{
  double gap = std::numeric_limits<double>::infinity();
  double speed = 0.0;
};

/// Closest obstacle ahead of `s_self` whose footprint intrudes into the corridor swept by a
/// body of `self_fp` travelling along `path` at lateral offset `offset(s)`.
template <typename OffsetFn>
std::optional<LeaderInfo> find_leader(
  const Polyline & path, OffsetFn && offset, double s_self, const Footprint & self_fp,
  const std::vector<PathObstacle> & obstacles, double lateral_margin = 0.2)
{
  std::optional<LeaderInfo> best;
  for (const auto & ob : obstacles) {
    const auto proj = path.project(ob.pose.position());
    if (proj.s <= s_self) {
      continue;
    }
    const double path_heading = path.heading_at(proj.s);
    const double rel = normalize_angle(ob.pose.heading - path_heading);
    const double c = std::abs(std::cos(rel));
    const double s = std::abs(std::sin(rel));
    const double lon_half = 0.5 * (c * ob.footprint.length + s * ob.footprint.width);
    const double lat_half = 0.5 * (s * ob.footprint.length + c * ob.footprint.width);
    // lateral distance measured at the obstacle's arc position; ends of the path clamp
    if (proj.s >= path.length() && proj.along > lon_half) {
      continue;
    }
    const double lateral = proj.lateral - offset(proj.s);
    if (std::abs(lateral) >= 0.5 * self_fp.width + lat_half + lateral_margin) {
      continue;
    }
    const double gap = proj.s - s_self - 0.5 * self_fp.length - lon_half;
    if (!best || gap < best->gap) {
      best = LeaderInfo{gap, ob.speed * std::cos(rel)};
    }
  }
  return best;
}

}  // namespace agplan

#endif  // AGPLAN__DYNAMICS_HPP_
