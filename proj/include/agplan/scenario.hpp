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

#ifndef AGPLAN__SCENARIO_HPP_
#define AGPLAN__SCENARIO_HPP_

#include "agplan/planners.hpp"
#include "agplan/world_model.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace agplan
{

class ScenarioInvalid : public std::invalid_argument
{
public:
  explicit ScenarioInvalid(const std::string & what) : std::invalid_argument(what) {}
};

/// Piecewise-linear speed over time, held constant outside the knots.
class SpeedProfile
{
public:
  SpeedProfile() = default;
  explicit SpeedProfile(std::vector<std::pair<double, double>> knots) : knots_(std::move(knots))
  {
    if (knots_.empty()) {
      throw ScenarioInvalid("speed profile needs at least one knot");
    }
    for (std::size_t i = 0; i < knots_.size(); ++i) {
      if (knots_[i].second < 0.0) {
        throw ScenarioInvalid("speed profile values must be non-negative");
      }
      if (i > 0 && !(knots_[i].first > knots_[i - 1].first)) {
        throw ScenarioInvalid("speed profile times must be strictly increasing");
      }
    }
  }

  double at(double t) const
  {
    if (knots_.empty()) {
      return 0.0;
    }
    if (t <= knots_.front().first) {
      return knots_.front().second;
    }
    for (std::size_t i = 1; i < knots_.size(); ++i) {
      if (t <= knots_[i].first) {
        const auto & [t0, v0] = knots_[i - 1];
        const auto & [t1, v1] = knots_[i];
        return v0 + (v1 - v0) * (t - t0) / (t1 - t0);
      }
    }
    return knots_.back().second;
  }

  const std::vector<std::pair<double, double>> & knots() const { return knots_; }

private:
  std::vector<std::pair<double, double>> knots_;
};

/// A background agent: a path, a start position on it and a speed script.
struct AgentSpec
{
  std::string id;
  Footprint footprint;
  AgentPolicy policy = AgentPolicy::idm_reactive;
  std::shared_ptr<const Polyline> path;
  double start_s = 0.0;
  double lateral = 0.0;
  SpeedProfile speed;
  double active_from = 0.0;
  double active_until = std::numeric_limits<double>::infinity();

  bool active_at(double t) const { return t + 1e-9 >= active_from && t < active_until - 1e-9; }
};

/// Initial ego state relative to the route.
struct EgoSpec
{
  double start_s = 0.0;
  double lateral = 0.0;
  double speed = 0.0;
  Footprint footprint;
};

/// Which single planner is designed to fail verification somewhere in the scenario.
struct ScenarioExpectation
{
  bool stub_fails = false;
  bool pdm_fails = false;
};

struct Scenario
{
  std::string name;
  std::string type;
  double duration = 15.0;
  double sim_dt = 0.1;
  std::shared_ptr<const LaneMap> map;
  std::shared_ptr<const Route> route;
  EgoSpec ego;
  std::vector<AgentSpec> agents;
  ProposalBank bank;
  ScenarioExpectation expect;
  std::string source;
};

namespace detail
{

inline YAML::Node require(const YAML::Node & node, const std::string & key, const std::string & where)
{
  const auto child = node[key];
  if (!child) {
    throw ScenarioInvalid(where + ": missing '" + key + "'");
  }
  return child;
}

template <typename T>
T get_or(const YAML::Node & node, const std::string & key, T fallback)
{
  const auto child = node[key];
  return child ? child.as<T>() : fallback;
}

inline std::vector<Vec2> parse_points(const YAML::Node & node, const std::string & where)
{
  if (!node.IsSequence()) {
    throw ScenarioInvalid(where + ": expected a list of [x, y] points");
  }
  std::vector<Vec2> pts;
  for (const auto & p : node) {
    if (!p.IsSequence() || p.size() != 2) {
      throw ScenarioInvalid(where + ": each point must be [x, y]");
    }
    pts.push_back({p[0].as<double>(), p[1].as<double>()});
  }
  return pts;
}

inline AgentPolicy parse_policy(const std::string & s, const std::string & where)
{
  if (s == "scripted") {
    return AgentPolicy::scripted;
  }
  if (s == "constant_velocity") {
    return AgentPolicy::constant_velocity;
  }
  if (s == "idm_reactive") {
    return AgentPolicy::idm_reactive;
  }
  throw ScenarioInvalid(where + ": unknown policy '" + s + "'");
}

inline ManeuverType parse_maneuver(const std::string & s, const std::string & where)
{
  if (s == "lane_follow") {
    return ManeuverType::lane_follow;
  }
  if (s == "lane_change") {
    return ManeuverType::lane_change;
  }
  if (s == "nudge") {
    return ManeuverType::nudge;
  }
  if (s == "stop") {
    return ManeuverType::stop;
  }
  throw ScenarioInvalid(where + ": unknown maneuver type '" + s + "'");
}

inline Footprint parse_footprint(const YAML::Node & node, Footprint fallback, const std::string & where)
{
  Footprint fp{get_or(node, "length", fallback.length), get_or(node, "width", fallback.width)};
  if (!(fp.length > 0.0) || !(fp.width > 0.0)) {
    throw ScenarioInvalid(where + ": footprint dimensions must be positive");
  }
  return fp;
}

inline double parse_until(const YAML::Node & node)
{
  const auto child = node["active_until"];
  return child ? child.as<double>() : std::numeric_limits<double>::infinity();
}

}  // namespace detail

/// Parses a scenario from YAML text. `source` is used in error messages.
inline Scenario parse_scenario(const std::string & text, const std::string & source = "<string>")
{
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception & e) {
    throw ScenarioInvalid(source + ": " + e.what());
  }
  if (!root.IsMap()) {
    throw ScenarioInvalid(source + ": top level must be a mapping");
  }

  Scenario sc;
  sc.source = source;
  try {
    sc.name = detail::require(root, "name", source).as<std::string>();
    sc.type = detail::get_or<std::string>(root, "type", "unlabeled");
    sc.duration = detail::get_or(root, "duration", sc.duration);
    sc.sim_dt = detail::get_or(root, "sim_dt", sc.sim_dt);
    if (!(sc.sim_dt > 0.0) || !(sc.duration > 0.0)) {
      throw ScenarioInvalid(source + ": duration and sim_dt must be positive");
    }

    std::vector<Lane> lanes;
    for (const auto & ln : detail::require(root, "lanes", source)) {
      Lane lane;
      lane.id = detail::require(ln, "id", source + " lane").as<std::string>();
      const std::string where = source + " lane '" + lane.id + "'";
      lane.width = detail::get_or(ln, "width", lane.width);
      lane.speed_limit = detail::get_or(ln, "speed_limit", lane.speed_limit);
      if (!(lane.speed_limit > 0.0)) {
        throw ScenarioInvalid(where + ": speed_limit must be positive");
      }
      lane.centerline = Polyline(detail::parse_points(detail::require(ln, "centerline", where), where));
      lanes.push_back(std::move(lane));
    }
    auto map = std::make_shared<LaneMap>(std::move(lanes));
    sc.map = map;
    sc.route = std::make_shared<Route>(
      *map, detail::require(root, "route", source).as<std::vector<std::string>>());

    const auto ego = detail::require(root, "ego", source);
    sc.ego.start_s = detail::get_or(ego, "s", 0.0);
    sc.ego.lateral = detail::get_or(ego, "lateral", 0.0);
    sc.ego.speed = detail::get_or(ego, "speed", 0.0);
    sc.ego.footprint = detail::parse_footprint(ego, Footprint{}, source + " ego");
    if (sc.ego.speed < 0.0 || sc.ego.start_s < 0.0 || sc.ego.start_s > sc.route->length()) {
      throw ScenarioInvalid(source + " ego: start must lie on the route with non-negative speed");
    }
    if (!map->contains_point(sc.route->centerline().offset_point_at(sc.ego.start_s, sc.ego.lateral))) {
      throw ScenarioInvalid(source + " ego: start must lie on the drivable area");
    }

    std::set<std::string> ids;
    for (const auto & ag : root["agents"]) {
      AgentSpec a;
      a.id = detail::require(ag, "id", source + " agent").as<std::string>();
      const std::string where = source + " agent '" + a.id + "'";
      if (!ids.insert(a.id).second) {
        throw ScenarioInvalid(where + ": duplicate id");
      }
      a.footprint = detail::parse_footprint(ag, Footprint{}, where);
      a.policy = detail::parse_policy(detail::get_or<std::string>(ag, "policy", "idm_reactive"), where);
      const auto path = detail::require(ag, "path", where);
      if (path["lane"]) {
        const Lane * lane = map->find(path["lane"].as<std::string>());
        if (lane == nullptr) {
          throw ScenarioInvalid(where + ": unknown lane '" + path["lane"].as<std::string>() + "'");
        }
        a.path = std::make_shared<Polyline>(lane->centerline);
      } else {
        a.path = std::make_shared<Polyline>(detail::parse_points(detail::require(path, "points", where), where));
      }
      a.start_s = detail::get_or(ag, "s", 0.0);
      a.lateral = detail::get_or(ag, "lateral", 0.0);
      const auto speed = detail::require(ag, "speed", where);
      if (speed.IsScalar()) {
        a.speed = SpeedProfile({{0.0, speed.as<double>()}});
      } else {
        std::vector<std::pair<double, double>> knots;
        for (const auto & k : speed) {
          if (!k.IsSequence() || k.size() != 2) {
            throw ScenarioInvalid(where + ": speed knots must be [t, v]");
          }
          knots.emplace_back(k[0].as<double>(), k[1].as<double>());
        }
        a.speed = SpeedProfile(std::move(knots));
      }
      a.active_from = detail::get_or(ag, "active_from", 0.0);
      a.active_until = detail::parse_until(ag);
      sc.agents.push_back(std::move(a));
    }

    const auto stub = detail::require(root, "stub", source);
    sc.bank.noise_amplitude = detail::get_or(stub, "noise", 0.0);
    for (const auto & s : detail::require(stub, "scripts", source + " stub")) {
      ManeuverScript m;
      m.name = detail::require(s, "name", source + " stub script").as<std::string>();
      const std::string where = source + " script '" + m.name + "'";
      m.type = detail::parse_maneuver(detail::get_or<std::string>(s, "type", "lane_follow"), where);
      m.target_speed = detail::get_or(s, "target_speed", m.target_speed);
      m.accel = detail::get_or(s, "accel", m.accel);
      m.offset = detail::get_or(s, "offset", m.offset);
      m.nudge_start_s = detail::get_or(s, "nudge_start_s", m.nudge_start_s);
      m.nudge_end_s = detail::get_or(s, "nudge_end_s", m.nudge_end_s);
      m.ramp_length = detail::get_or(s, "ramp_length", m.ramp_length);
      if (s["stop_s"]) {
        m.stop_s = s["stop_s"].as<double>();
      }
      m.yield = detail::get_or(s, "yield", m.yield);
      m.preference = detail::get_or(s, "preference", m.preference);
      m.active_from = detail::get_or(s, "active_from", m.active_from);
      m.active_until = detail::parse_until(s);
      if (!(m.target_speed >= 0.0) || !(m.accel > 0.0) || !(m.ramp_length > 0.0)) {
        throw ScenarioInvalid(where + ": target_speed >= 0, accel > 0 and ramp_length > 0 required");
      }
      if (m.type == ManeuverType::nudge && m.nudge_end_s < m.nudge_start_s) {
        throw ScenarioInvalid(where + ": nudge_end_s precedes nudge_start_s");
      }
      sc.bank.scripts.push_back(std::move(m));
    }
    if (sc.bank.scripts.empty()) {
      throw ScenarioInvalid(source + ": stub needs at least one script");
    }

    if (const auto ex = root["expect"]) {
      sc.expect.stub_fails = detail::get_or(ex, "stub_fails", false);
      sc.expect.pdm_fails = detail::get_or(ex, "pdm_fails", false);
    }
  } catch (const YAML::Exception & e) {
    throw ScenarioInvalid(source + ": " + e.what());
  } catch (const InvalidGeometry & e) {
    throw ScenarioInvalid(source + ": " + e.what());
  } catch (const BrokenRoute & e) {
    throw ScenarioInvalid(source + ": " + e.what());
  }
  return sc;
}

inline Scenario load_scenario(const std::filesystem::path & path)
{
  std::ifstream in(path);
  if (!in) {
    throw ScenarioInvalid("cannot open scenario file " + path.string());
  }
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), path.string());
}

/// Every `*.yaml` file in `dir`, ordered by file name.
inline std::vector<Scenario> load_suite(const std::filesystem::path & dir)
{
  std::vector<std::filesystem::path> files;
  for (const auto & entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".yaml") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<Scenario> out;
  out.reserve(files.size());
  for (const auto & f : files) {
    out.push_back(load_scenario(f));
  }
  return out;
}

}  // namespace agplan

#endif  // AGPLAN__SCENARIO_HPP_
