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

#ifndef AGPLAN__VERIFICATION_HPP_
#define AGPLAN__VERIFICATION_HPP_

#include "agplan/arbitration.hpp"
#include "agplan/scoring.hpp"
#include "agplan/world_model.hpp"

#include <cstdio>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace agplan
{

using arbitration::Verdict;

struct VerifierConfig
{
  double horizon = 2.0;
  bool classify_at_fault = true;
  // rejects plans whose ego polygon leaves the drivable area entirely
  bool check_drivable_area = true;

  void validate() const
  {
    if (!(horizon > 0.0)) {
      throw std::invalid_argument("verification horizon must be positive");
    }
  }
};

class HorizonTooShort : public std::invalid_argument
{
public:
  explicit HorizonTooShort(const std::string & what) : std::invalid_argument(what) {}
};

/// Pose, speed and shape of a body at one instant.
struct BodySample
{
  Pose2D pose;
  double speed = 0.0;
  Footprint footprint;
};

/// Decides whether the ego is responsible for a contact between two overlapping bodies.
/// The ego is not at fault when it is (nearly) stopped, or when the contact region lies entirely
/// on the rear half of the ego and the other body is faster.
inline bool classify_at_fault(const BodySample & ego, const BodySample & agent)
{
  constexpr double kStoppedSpeed = 0.1;
  if (ego.speed < kStoppedSpeed) {
    return false;
  }
  const auto ego_poly = footprint_polygon(ego.pose, ego.footprint);
  const auto agent_poly = footprint_polygon(agent.pose, agent.footprint);
  const auto contact = clip_convex(ego_poly, agent_poly);
  if (contact.empty()) {
    return true;
  }
  const bool rear_only = std::all_of(contact.begin(), contact.end(), [&ego](Vec2 p) {
    return to_local(ego.pose, p).x <= 1e-9;
  });
  return !(rear_only && agent.speed > ego.speed);
}

inline std::string format_seconds(double t)
{
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", t);
  return buf;
}

/// Steps along `traj` up to the verification horizon and checks it against the forecasts.
inline Verdict verify_against(
  const Trajectory & traj, const Footprint & ego_fp, std::span<const AgentForecast> forecasts,
  const LaneMap * map, const VerifierConfig & cfg)
{
  if (traj.horizon() + 1e-9 < cfg.horizon) {
    throw HorizonTooShort(
      "trajectory horizon " + format_seconds(traj.horizon()) + "s is shorter than the verification horizon");
  }
  // fault is decided at first contact with each agent and not revisited later in the horizon
  std::vector<bool> excused(forecasts.size(), false);
  for (const auto & sample : traj.samples()) {
    if (sample.t > cfg.horizon + 1e-9) {
      break;
    }
    const auto ego_poly = footprint_polygon(sample.pose, ego_fp);
    for (std::size_t i = 0; i < forecasts.size(); ++i) {
      const auto & f = forecasts[i];
      if (excused[i]) {
        continue;
      }
      const auto agent = f.trajectory.sample_at(sample.t);
      if (!detail::bodies_may_touch(sample.pose, ego_fp, agent.pose, f.footprint)) {
        continue;
      }
      const auto agent_poly = footprint_polygon(agent.pose, f.footprint);
      if (!convex_polygons_overlap(ego_poly, agent_poly)) {
        continue;
      }
      const bool at_fault = !cfg.classify_at_fault ||
                            classify_at_fault(
                              {sample.pose, sample.speed, ego_fp}, {agent.pose, agent.speed, f.footprint});
      excused[i] = !at_fault;
      if (at_fault) {
        return Verdict::fail(
          "at-fault collision with " + f.id + " at t=" + format_seconds(sample.t) + "s", sample.t, f.id);
      }
    }
    if (cfg.check_drivable_area && map != nullptr && map->polygon_fully_outside(ego_poly)) {
      return Verdict::fail("left drivable area at t=" + format_seconds(sample.t) + "s", sample.t);
    }
  }
  return Verdict::pass();
}

/// Rejects a plan if an at-fault collision with a constant-velocity forecast is predicted within
/// the horizon, or if the ego leaves the drivable area entirely.
inline Verdict verify(const Trajectory & traj, const WorldSnapshot & world, const VerifierConfig & cfg = {})
{
  const auto forecasts = forecast_agents(world, cfg.horizon, traj.dt());
  return verify_against(traj, world.ego.footprint, forecasts, world.map.get(), cfg);
}

}  // namespace agplan

#endif  // AGPLAN__VERIFICATION_HPP_
