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

#ifndef AGPLAN__PLANNERS_HPP_
#define AGPLAN__PLANNERS_HPP_

#include "agplan/arbitration.hpp"
#include "agplan/dynamics.hpp"
#include "agplan/scoring.hpp"
#include "agplan/world_model.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace agplan
{

using PlanningBehavior = arbitration::Behavior<WorldSnapshot, Trajectory>;
using InvocationCondition = std::function<bool(const WorldSnapshot &)>;

class NoRoute : public std::invalid_argument
{
public:
  explicit NoRoute(const std::string & what) : std::invalid_argument(what) {}
};

class EmptyBank : public std::invalid_argument
{
public:
  explicit EmptyBank(const std::string & what) : std::invalid_argument(what) {}
};

/// Shared settings for rendering a reference along the route and tracking it in closed loop.
struct RolloutConfig
{
  double horizon = kDefaultPlanningHorizon;
  double dt = kDefaultDt;
  BicycleParams bicycle;
  TrackingGains gains;
};

/// Longitudinal behavior of a reference: IDM toward `idm.v0`, optionally following forecast
/// agents in the corridor and stopping in front of `stop_s` (route arc length).
struct LongitudinalPolicy
{
  IDMParams idm;
  bool yield = true;
  std::optional<double> stop_s;
};

/// Reference trajectory along the route centerline shifted by `offset(s)`. The route end acts as
/// a stop line.
template <typename OffsetFn>
Trajectory build_reference(
  const WorldSnapshot & world, const std::vector<AgentForecast> & forecasts, OffsetFn && offset,
  const LongitudinalPolicy & policy, const RolloutConfig & rollout)
{
  if (!world.route || world.route->empty()) {
    throw NoRoute("planning requires a route");
  }
  const Route & route = *world.route;
  const Polyline & line = route.centerline();
  const Footprint & fp = world.ego.footprint;
  const auto steps = static_cast<std::size_t>(std::llround(rollout.horizon / rollout.dt));
  const double dt = rollout.dt;

  double s = project_to_route(route, world.ego.pose).arc_length;
  double v = world.ego.speed;
  const double stop_line = std::min(policy.stop_s.value_or(route.length()), route.length());

  std::vector<TrajectorySample> samples;
  samples.reserve(steps + 1);
  std::vector<PathObstacle> obstacles;
  for (std::size_t k = 0; k <= steps; ++k) {
    const double t = static_cast<double>(k) * dt;

    obstacles.clear();
    if (policy.yield) {
      for (const auto & f : forecasts) {
        const auto a = f.trajectory.sample_at(t);
        obstacles.push_back({a.pose, a.speed, f.footprint});
      }
    }
    LeaderInfo leader;
    if (const auto found = find_leader(line, offset, s, fp, obstacles)) {
      leader = *found;
    }
    const double stop_gap = stop_line - s - 0.5 * fp.length;
    if (stop_gap < leader.gap) {
      leader = {stop_gap, 0.0};
    }
    const double a_cmd = idm_accel(v, leader.speed, leader.gap, policy.idm);
    const double v_next = std::max(0.0, v + a_cmd * dt);
    const double a = (v_next - v) / dt;

    const Vec2 p = line.offset_point_at(s, offset(s));
    const Vec2 ahead = line.offset_point_at(s + 0.5, offset(s + 0.5));
    samples.push_back({t, {p.x, p.y, std::atan2(ahead.y - p.y, ahead.x - p.x)}, v, a});

    s += 0.5 * (v + v_next) * dt;
    v = v_next;
  }
  return Trajectory(dt, std::move(samples));
}

// ---------------------------------------------------------------------------------------------
// Rule-based planner: IDM proposals at several target speeds and lateral offsets.

struct PdmLiteConfig
{
  // enumeration order; on equal scores the earlier proposal wins
  std::vector<double> speed_fractions{1.0, 0.8, 0.6, 0.4, 0.2};
  std::vector<double> lateral_offsets{0.0, -1.0, 1.0};
  RolloutConfig rollout;
  IDMParams idm{.max_braking = 4.05};
  ScoringConfig scoring;
};

struct PdmProposal
{
  double speed_fraction = 1.0;
  double lateral_offset = 0.0;
  Trajectory trajectory;
  ScoreBreakdown score;
};

/// All proposals, forward simulated with the tracking controller and scored.
inline std::vector<PdmProposal> pdm_lite_proposals(const WorldSnapshot & world, const PdmLiteConfig & cfg = {})
{
  if (!world.route || world.route->empty()) {
    throw NoRoute("pdm_lite requires a route");
  }
  const double s_ego = project_to_route(*world.route, world.ego.pose).arc_length;
  const double limit = world.route->speed_limit_at(s_ego);
  const auto ctx = make_scoring_context(world, cfg.rollout.horizon, cfg.rollout.dt);

  std::vector<PdmProposal> out;
  out.reserve(cfg.speed_fractions.size() * cfg.lateral_offsets.size());
  for (const double offset : cfg.lateral_offsets) {
    for (const double fraction : cfg.speed_fractions) {
      LongitudinalPolicy policy;
      policy.idm = cfg.idm;
      policy.idm.v0 = std::max(fraction * limit, 0.1);
      const auto reference = build_reference(
        world, ctx.forecasts, [offset](double) { return offset; }, policy, cfg.rollout);
      PdmProposal p;
      p.speed_fraction = fraction;
      p.lateral_offset = offset;
      p.trajectory = simulate_tracking(world.ego, reference, cfg.rollout.bicycle, cfg.rollout.gains);
      p.score = score_trajectory(p.trajectory, ctx, cfg.scoring);
      out.push_back(std::move(p));
    }
  }
  return out;
}

/// Index of the highest total score; the earliest wins ties.
inline std::size_t best_proposal_index(const std::vector<PdmProposal> & proposals)
{
  std::size_t best = 0;
  for (std::size_t i = 1; i < proposals.size(); ++i) {
    if (proposals[i].score.s_total > proposals[best].score.s_total) {
      best = i;
    }
  }
  return best;
}

/// Highest scoring proposal. No internal emergency braking; that check lives in the graph.
inline Trajectory pdm_lite_propose(const WorldSnapshot & world, const PdmLiteConfig & cfg = {})
{
  auto proposals = pdm_lite_proposals(world, cfg);
  return std::move(proposals[best_proposal_index(proposals)].trajectory);
}

// ---------------------------------------------------------------------------------------------
// Scripted stand-in for a learned planner.

enum class ManeuverType { lane_follow, lane_change, nudge, stop };

/// One parameterized maneuver. Lateral offsets are relative to the route centerline, left
/// positive; nudge and stop positions are route arc lengths.
struct ManeuverScript
{
  std::string name;
  ManeuverType type = ManeuverType::lane_follow;
  double target_speed = 10.0;
  double accel = 1.5;
  double offset = 0.0;
  double nudge_start_s = 0.0;
  double nudge_end_s = 0.0;
  double ramp_length = 10.0;
  std::optional<double> stop_s;
  bool yield = true;
  double preference = 0.0;
  double active_from = 0.0;
  double active_until = std::numeric_limits<double>::infinity();

  bool active_at(double t) const { return t + 1e-9 >= active_from && t < active_until - 1e-9; }

  double lateral_offset_at(double s) const
  {
    switch (type) {
      case ManeuverType::lane_follow:
      case ManeuverType::stop:
        return 0.0;
      case ManeuverType::lane_change:
        return offset;
      case ManeuverType::nudge:
        break;
    }
    const auto smoothstep = [](double x) {
      x = std::clamp(x, 0.0, 1.0);
      return x * x * (3.0 - 2.0 * x);
    };
    if (s < nudge_start_s) {
      return offset * smoothstep((s - (nudge_start_s - ramp_length)) / ramp_length);
    }
    if (s <= nudge_end_s) {
      return offset;
    }
    return offset * (1.0 - smoothstep((s - nudge_end_s) / ramp_length));
  }
};

struct ProposalBank
{
  std::vector<ManeuverScript> scripts;
  // uniform perturbation of each preference per tick, for fuzzing
  double noise_amplitude = 0.0;
  std::uint64_t seed = 0;
};

struct StubConfig
{
  RolloutConfig rollout;
  IDMParams idm{.max_braking = 4.05};
};

namespace detail
{

inline std::uint64_t splitmix64(std::uint64_t x)
{
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30U)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27U)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31U);
}

/// Deterministic value in [-1, 1) from a seed and two indices.
inline double hashed_unit(std::uint64_t seed, std::uint64_t a, std::uint64_t b)
{
  const std::uint64_t h = splitmix64(splitmix64(splitmix64(seed) ^ a) ^ b);
  return static_cast<double>(h >> 11U) * 0x1.0p-53 * 2.0 - 1.0;
}

}  // namespace detail

/// Index of the script the stub prefers at the current tick, if any script is active.
inline std::optional<std::size_t> preferred_script(const WorldSnapshot & world, const ProposalBank & bank)
{
  std::optional<std::size_t> best;
  double best_pref = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < bank.scripts.size(); ++i) {
    const auto & script = bank.scripts[i];
    if (!script.active_at(world.time)) {
      continue;
    }
    double pref = script.preference;
    if (bank.noise_amplitude > 0.0) {
      pref += bank.noise_amplitude * detail::hashed_unit(bank.seed, world.tick, i);
    }
    if (pref > best_pref) {
      best_pref = pref;
      best = i;
    }
  }
  return best;
}

inline Trajectory render_maneuver(
  const WorldSnapshot & world, const ManeuverScript & script, const StubConfig & cfg = {})
{
  LongitudinalPolicy policy;
  policy.idm = cfg.idm;
  policy.idm.v0 = std::max(script.target_speed, 0.1);
  policy.idm.a_max = script.accel;
  policy.yield = script.yield;
  policy.stop_s = script.stop_s;
  std::vector<AgentForecast> forecasts;
  if (script.yield) {
    forecasts = forecast_agents(world, cfg.rollout.horizon, cfg.rollout.dt);
  }
  const auto reference = build_reference(
    world, forecasts, [&script](double s) { return script.lateral_offset_at(s); }, policy, cfg.rollout);
  return simulate_tracking(world.ego, reference, cfg.rollout.bicycle, cfg.rollout.gains);
}

/// Renders the preferred active script.
inline Trajectory learned_stub_propose(
  const WorldSnapshot & world, const ProposalBank & bank, const StubConfig & cfg = {})
{
  if (bank.scripts.empty()) {
    throw EmptyBank("proposal bank has no scripts");
  }
  const auto idx = preferred_script(world, bank);
  if (!idx) {
    throw EmptyBank("no proposal script is active at t=" + std::to_string(world.time));
  }
  return render_maneuver(world, bank.scripts[*idx], cfg);
}

// ---------------------------------------------------------------------------------------------
// Last-resort fallback.

struct EmergencyStopConfig
{
  double deceleration = 5.0;
  double horizon = kDefaultPlanningHorizon;
  double dt = kDefaultDt;

  // the constituent planners brake at 4.05 m/s^2; the fallback must brake harder
  static constexpr double kPlannerBraking = 4.05;

  void validate() const
  {
    if (!(deceleration > kPlannerBraking)) {
      throw std::invalid_argument("emergency deceleration must exceed 4.05 m/s^2");
    }
    if (!(horizon > 0.0) || !(dt > 0.0)) {
      throw std::invalid_argument("emergency stop horizon and dt must be positive");
    }
  }
};

/// Straight-line constant deceleration along the current heading, then holding the pose.
inline Trajectory emergency_stop_propose(const WorldSnapshot & world, const EmergencyStopConfig & cfg = {})
{
  cfg.validate();
  const auto & ego = world.ego;
  const double a = cfg.deceleration;
  const double v0 = ego.speed;
  const double t_stop = v0 / a;
  const Vec2 dir = unit_from_heading(ego.pose.heading);
  const auto steps = static_cast<std::size_t>(std::llround(cfg.horizon / cfg.dt));
  std::vector<TrajectorySample> samples;
  samples.reserve(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k) {
    const double t = static_cast<double>(k) * cfg.dt;
    const bool moving = t < t_stop;
    const double te = moving ? t : t_stop;
    const double dist = v0 * te - 0.5 * a * te * te;
    Pose2D pose = ego.pose;
    pose.x += dir.x * dist;
    pose.y += dir.y * dist;
    samples.push_back({t, pose, moving ? v0 - a * t : 0.0, moving ? -a : 0.0});
  }
  return Trajectory(cfg.dt, std::move(samples));
}

// ---------------------------------------------------------------------------------------------
// Behavior components.

class PdmLiteBehavior : public PlanningBehavior
{
public:
  explicit PdmLiteBehavior(PdmLiteConfig cfg = {}, InvocationCondition invocation = {}, std::string name = "PdmLite")
  : PlanningBehavior(std::move(name)), cfg_(std::move(cfg)), invocation_(std::move(invocation))
  {
  }
  bool check_invocation(const WorldSnapshot & world) const override
  {
    return !invocation_ || invocation_(world);
  }
  Trajectory get_command(const WorldSnapshot & world) const override { return pdm_lite_propose(world, cfg_); }

private:
  PdmLiteConfig cfg_;
  InvocationCondition invocation_;
};

class LearnedStubBehavior : public PlanningBehavior
{
public:
  explicit LearnedStubBehavior(
    ProposalBank bank, StubConfig cfg = {}, InvocationCondition invocation = {}, std::string name = "LearnedStub")
  : PlanningBehavior(std::move(name)), bank_(std::move(bank)), cfg_(std::move(cfg)), invocation_(std::move(invocation))
  {
  }
  /// Applicable while at least one script is active.
  bool check_invocation(const WorldSnapshot & world) const override
  {
    if (invocation_ && !invocation_(world)) {
      return false;
    }
    return preferred_script(world, bank_).has_value();
  }
  Trajectory get_command(const WorldSnapshot & world) const override
  {
    return learned_stub_propose(world, bank_, cfg_);
  }

private:
  ProposalBank bank_;
  StubConfig cfg_;
  InvocationCondition invocation_;
};

class EmergencyStopBehavior : public PlanningBehavior
{
public:
  explicit EmergencyStopBehavior(EmergencyStopConfig cfg = {}, std::string name = "EmergencyStop")
  : PlanningBehavior(std::move(name), /*last_resort=*/true), cfg_(cfg)
  {
    cfg_.validate();
  }
  Trajectory get_command(const WorldSnapshot & world) const override
  {
    return emergency_stop_propose(world, cfg_);
  }

private:
  EmergencyStopConfig cfg_;
};

}  // namespace agplan

#endif  // AGPLAN__PLANNERS_HPP_
