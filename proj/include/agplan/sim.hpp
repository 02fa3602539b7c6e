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

#ifndef AGPLAN__SIM_HPP_
#define AGPLAN__SIM_HPP_

#include "agplan/arbitration.hpp"
#include "agplan/dynamics.hpp"
#include "agplan/planners.hpp"
#include "agplan/scenario.hpp"
#include "agplan/scoring.hpp"
#include "agplan/verification.hpp"

#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace agplan
{

enum class GraphVariant { full, no_verify, pdm_only, stub_only };

inline std::string to_string(GraphVariant v)
{
  switch (v) {
    case GraphVariant::full:
      return "full";
    case GraphVariant::no_verify:
      return "no_verify";
    case GraphVariant::pdm_only:
      return "pdm_only";
    case GraphVariant::stub_only:
      return "stub_only";
  }
  return "unknown";
}

inline GraphVariant parse_variant(const std::string & s)
{
  for (const auto v : {GraphVariant::full, GraphVariant::no_verify, GraphVariant::pdm_only, GraphVariant::stub_only}) {
    if (to_string(v) == s) {
      return v;
    }
  }
  throw std::invalid_argument("unknown graph variant '" + s + "'");
}

inline std::string to_string(SimMode m) { return m == SimMode::reactive ? "reactive" : "non_reactive"; }

inline SimMode parse_mode(const std::string & s)
{
  if (s == "reactive") {
    return SimMode::reactive;
  }
  if (s == "non_reactive") {
    return SimMode::non_reactive;
  }
  throw std::invalid_argument("unknown simulation mode '" + s + "'");
}

struct SimConfig
{
  double sim_dt = kDefaultDt;
  std::optional<double> duration;  // scenario default when empty
  SimMode mode = SimMode::reactive;
  bool verification_enabled = true;
  GraphVariant variant = GraphVariant::full;
  std::uint64_t seed = 0;

  VerifierConfig verifier;
  PdmLiteConfig pdm;
  StubConfig stub;
  EmergencyStopConfig emergency;
  ScoringConfig scoring;
  IDMParams agent_idm;  // reactive background agents

  /// Number of ticks for `scenario`; the duration must be a whole number of steps.
  std::size_t ticks_for(const Scenario & scenario) const
  {
    const double duration = this->duration.value_or(scenario.duration);
    const double n = duration / sim_dt;
    if (!(sim_dt > 0.0) || !(duration > 0.0) || std::abs(n - std::round(n)) > 1e-6) {
      throw std::invalid_argument("duration must be a positive multiple of sim_dt");
    }
    return static_cast<std::size_t>(std::llround(n));
  }
};

inline constexpr const char * kStubName = "LearnedStub";
inline constexpr const char * kPdmName = "PdmLite";
inline constexpr const char * kComposerName = "Composer";
inline constexpr const char * kRootName = "Root";
inline constexpr const char * kEmergencyName = "EmergencyStop";

using PlanningArbitrator = arbitration::Arbitrator<WorldSnapshot, Trajectory>;
using PlanningPriority = arbitration::PriorityArbitrator<WorldSnapshot, Trajectory>;
using PlanningCost = arbitration::CostArbitrator<WorldSnapshot, Trajectory>;

/// Cost of a plan for the cost arbitrator: the negated total score, with the breakdown attached.
inline arbitration::CostEvaluation score_as_cost(
  const Trajectory & plan, const WorldSnapshot & world, const ScoringConfig & cfg)
{
  const auto ctx = make_scoring_context(world, plan.horizon(), plan.dt());
  const auto b = score_trajectory(plan, ctx, cfg);
  return {b.cost(),
          {{"s_total", b.s_total},
           {"s_coll", b.s_coll},
           {"s_driv", b.s_driv},
           {"s_dir", b.s_dir},
           {"g_prog", b.g_prog},
           {"s_progress", b.s_progress},
           {"s_ttc", b.s_ttc},
           {"s_comfort", b.s_comfort}}};
}

/// The arbitration graph for one variant. `full` is
///   Root (priority) -> [Composer (cost) -> [LearnedStub, PdmLite], EmergencyStop].
inline std::shared_ptr<PlanningArbitrator> build_graph(const Scenario & scenario, const SimConfig & cfg)
{
  const bool verify_on = cfg.verification_enabled && cfg.variant != GraphVariant::no_verify;
  PlanningArbitrator::Verifier verifier;
  if (verify_on) {
    verifier = [vc = cfg.verifier](const Trajectory & plan, const WorldSnapshot & world) {
      return verify(plan, world, vc);
    };
  }
  ProposalBank bank = scenario.bank;
  bank.seed = cfg.seed;
  auto stub = std::make_shared<LearnedStubBehavior>(std::move(bank), cfg.stub);
  auto pdm = std::make_shared<PdmLiteBehavior>(cfg.pdm);
  auto estop = std::make_shared<EmergencyStopBehavior>(cfg.emergency);

  std::vector<PlanningBehavior::Ptr> root_children;
  switch (cfg.variant) {
    case GraphVariant::full:
    case GraphVariant::no_verify: {
      auto composer = std::make_shared<PlanningCost>(
        kComposerName, std::vector<PlanningBehavior::Ptr>{stub, pdm}, verifier,
        [sc = cfg.scoring](const Trajectory & plan, const WorldSnapshot & world) {
          return score_as_cost(plan, world, sc);
        });
      root_children = {composer, estop};
      break;
    }
    case GraphVariant::stub_only:
      root_children = {stub, estop};
      break;
    case GraphVariant::pdm_only:
      root_children = {pdm, estop};
      break;
  }
  return std::make_shared<PlanningPriority>(kRootName, std::move(root_children), verifier);
}

/// Simulation-side state of a background agent.
struct AgentRuntime
{
  double s = 0.0;  // arc length along the agent's path
  Agent agent;     // current pose and speed
};

struct SimState
{
  WorldSnapshot world;
  std::vector<AgentRuntime> agents;  // parallel to scenario.agents
};

namespace detail
{

inline Pose2D pose_on_path(const AgentSpec & spec, double s)
{
  const Vec2 p = spec.path->offset_point_at(s, spec.lateral);
  return {p.x, p.y, spec.path->smooth_heading_at(s, 1.0)};
}

inline std::vector<Agent> active_agents(const Scenario & sc, const std::vector<AgentRuntime> & rt, double t)
{
  std::vector<Agent> out;
  for (std::size_t i = 0; i < sc.agents.size(); ++i) {
    if (sc.agents[i].active_at(t)) {
      out.push_back(rt[i].agent);
    }
  }
  return out;
}

}  // namespace detail

inline SimState initial_state(const Scenario & sc, const SimConfig & cfg)
{
  SimState st;
  st.world.tick = 0;
  st.world.time = 0.0;
  st.world.map = sc.map;
  st.world.route = sc.route;
  st.world.mode = cfg.mode;
  const Polyline & line = sc.route->centerline();
  const Vec2 p = line.offset_point_at(sc.ego.start_s, sc.ego.lateral);
  st.world.ego.pose = {p.x, p.y, line.smooth_heading_at(sc.ego.start_s, 1.0)};
  st.world.ego.speed = sc.ego.speed;
  st.world.ego.footprint = sc.ego.footprint;
  for (const auto & spec : sc.agents) {
    AgentRuntime rt;
    rt.s = spec.start_s;
    rt.agent.id = spec.id;
    rt.agent.pose = detail::pose_on_path(spec, spec.start_s);
    rt.agent.speed = spec.speed.at(0.0);
    rt.agent.footprint = spec.footprint;
    rt.agent.policy = spec.policy;
    st.agents.push_back(std::move(rt));
  }
  st.world.agents = detail::active_agents(sc, st.agents, 0.0);
  return st;
}

/// Advances every background agent by one tick from the current (synchronous) snapshot.
inline std::vector<AgentRuntime> propagate_agents(
  const Scenario & sc, const SimState & st, const SimConfig & cfg)
{
  const double dt = cfg.sim_dt;
  const double t = st.world.time;
  std::vector<AgentRuntime> next = st.agents;
  for (std::size_t i = 0; i < sc.agents.size(); ++i) {
    const AgentSpec & spec = sc.agents[i];
    const AgentRuntime & cur = st.agents[i];
    AgentRuntime & nx = next[i];

    if (spec.policy == AgentPolicy::constant_velocity) {
      const Vec2 d = unit_from_heading(cur.agent.pose.heading);
      nx.agent.pose.x += d.x * cur.agent.speed * dt;
      nx.agent.pose.y += d.y * cur.agent.speed * dt;
      continue;
    }

    const double v = cur.agent.speed;
    double v_next = spec.speed.at(t + dt);
    if (spec.policy == AgentPolicy::idm_reactive && cfg.mode == SimMode::reactive && spec.active_at(t)) {
      std::vector<PathObstacle> obstacles;
      obstacles.push_back({st.world.ego.pose, st.world.ego.speed, st.world.ego.footprint});
      for (std::size_t j = 0; j < sc.agents.size(); ++j) {
        if (j != i && sc.agents[j].active_at(t)) {
          obstacles.push_back({st.agents[j].agent.pose, st.agents[j].agent.speed, sc.agents[j].footprint});
        }
      }
      const double lateral = spec.lateral;
      const auto leader = find_leader(
        *spec.path, [lateral](double) { return lateral; }, cur.s, spec.footprint, obstacles);
      IDMParams idm = cfg.agent_idm;
      idm.v0 = std::max(spec.speed.at(t), 0.1);
      const double a_script = (v_next - v) / dt;
      const double a_idm = leader ? idm_accel(v, leader->speed, leader->gap, idm) : a_script;
      v_next = std::max(0.0, v + std::min(a_script, a_idm) * dt);
    }
    nx.s = cur.s + 0.5 * (v + v_next) * dt;
    nx.agent.speed = v_next;
    nx.agent.pose = detail::pose_on_path(spec, nx.s);
  }
  return next;
}

struct StepResult
{
  SimState next;
  arbitration::DecisionTrace trace;
  Trajectory plan;
};

/// Runs the graph on the current snapshot, tracks one step of the selected plan and advances the
/// agents. Propagates NoValidOption.
inline StepResult step(
  const Scenario & sc, const SimState & st, const PlanningArbitrator & graph, const SimConfig & cfg)
{
  auto result = arbitration::run_graph(graph, st.world, st.world.tick);
  StepResult out;
  out.trace = std::move(result.trace);
  out.plan = std::move(result.command);

  out.next.agents = propagate_agents(sc, st, cfg);
  out.next.world = st.world;
  out.next.world.tick = st.world.tick + 1;
  out.next.world.time = static_cast<double>(out.next.world.tick) * cfg.sim_dt;
  out.next.world.ego =
    track_trajectory(st.world.ego, out.plan, cfg.sim_dt, cfg.stub.rollout.bicycle, 0.0, cfg.stub.rollout.gains);
  out.next.world.agents = detail::active_agents(sc, out.next.agents, out.next.world.time);
  return out;
}

/// Which planner the arbitration graph selected on one tick.
enum class Selection { stub, pdm, tie, fallback };

inline std::string to_string(Selection s)
{
  switch (s) {
    case Selection::stub:
      return "stub";
    case Selection::pdm:
      return "pdm";
    case Selection::tie:
      return "tie";
    case Selection::fallback:
      return "fallback";
  }
  return "unknown";
}

/// Classifies a tick. A tie is a tick on which both planners passed with exactly equal cost.
inline Selection classify_selection(const arbitration::DecisionTrace & trace)
{
  if (trace.fallback_engaged) {
    return Selection::fallback;
  }
  const auto * chosen = trace.selected_behavior();
  if (chosen == nullptr) {
    throw std::logic_error("trace without a selected behavior");
  }
  const auto * stub = trace.find(kStubName);
  const auto * pdm = trace.find(kPdmName);
  if (stub && pdm && stub->cost && pdm->cost && *stub->cost == *pdm->cost) {
    return Selection::tie;
  }
  if (chosen->name == kStubName) {
    return Selection::stub;
  }
  if (chosen->name == kPdmName) {
    return Selection::pdm;
  }
  throw std::logic_error("unexpected selected behavior '" + chosen->name + "'");
}

struct SelectionCounts
{
  std::size_t stub = 0;
  std::size_t pdm = 0;
  std::size_t tie = 0;
};

/// Ticks on which planners failed verification. `both` counts ticks on which every planner present
/// in the graph failed; in a single-planner variant that is the planner's own failure ticks.
struct VerificationFailCounts
{
  std::size_t stub_only = 0;
  std::size_t pdm_only = 0;
  std::size_t both = 0;
  std::size_t at_least_one = 0;
  std::size_t stub_total = 0;
  std::size_t pdm_total = 0;
};

struct RunMetrics
{
  double score = 0.0;
  std::size_t at_fault_collisions = 0;
  std::size_t zero_score = 0;  // 1 if this run's score is exactly 0
  double eb_rate = 0.0;
  SelectionCounts selection;
  VerificationFailCounts verification_fails;
  std::size_t fallback_ticks = 0;
  std::size_t total_ticks = 0;
  std::size_t agent_overlaps = 0;  // ticks with any agent-agent overlap
};

/// Per-tick record kept for trace logs and plots.
struct TickRecord
{
  arbitration::DecisionTrace trace;
  Selection selection = Selection::fallback;
  ScoreBreakdown online;  // the executed plan scored against constant-velocity forecasts
};

struct ScenarioResult
{
  std::string scenario;
  std::string type;
  GraphVariant variant = GraphVariant::full;
  SimMode mode = SimMode::reactive;
  RunMetrics metrics;
  ScoreBreakdown post_hoc;  // over the realized rollout
  double progress = 0.0;    // realized arc length gained along the route
  std::vector<std::string> collided_with;
  std::vector<TickRecord> ticks;
  Trajectory ego_history;
};

/// Post-hoc closed-loop score of a realized rollout. `reference_progress` is the progress the run is
/// normalized against; a non-positive value means the run is its own reference.
inline ScoreBreakdown post_hoc_score(
  const ScenarioResult & r, const Scenario & sc, const std::vector<std::vector<Agent>> & agent_history,
  double reference_progress, const ScoringConfig & cfg)
{
  ScoreBreakdown b;
  const Trajectory & ego = r.ego_history;
  const Footprint & fp = sc.ego.footprint;
  b.s_coll = r.metrics.at_fault_collisions > 0 ? 0.0 : 1.0;

  bool left_road = false;
  std::size_t inside = 0;
  for (const auto & s : ego.samples()) {
    const auto poly = footprint_polygon(s.pose, fp);
    inside += sc.map->contains_polygon(poly) ? 1 : 0;
    left_road = left_road || sc.map->polygon_fully_outside(poly);
  }
  b.s_driv = left_road ? 0.0 : static_cast<double>(inside) / static_cast<double>(std::max<std::size_t>(ego.size(), 1));
  b.s_dir = driving_direction_score(ego, *sc.map, cfg.direction);

  const double reference = reference_progress > 0.0 ? reference_progress : r.progress;
  b.progress_ratio = reference > 0.0 ? r.progress / reference : 1.0;
  b.g_prog = progress_gate(r.progress, reference, cfg.weights.tau);
  b.s_progress = std::clamp(b.progress_ratio, 0.0, 1.0);

  // mean time-to-collision score of constant-velocity extrapolations from the realized states
  double ttc_sum = 0.0;
  const double h = cfg.ttc_horizon;
  for (std::size_t k = 0; k < ego.size() && k < agent_history.size(); ++k) {
    Agent as_agent;
    as_agent.pose = ego[k].pose;
    as_agent.speed = ego[k].speed;
    const auto ego_cv = forecast_constant_velocity(as_agent, h, ego.dt());
    std::vector<AgentForecast> forecasts;
    for (const auto & a : agent_history[k]) {
      forecasts.push_back({a.id, a.footprint, forecast_constant_velocity(a, h, ego.dt())});
    }
    ttc_sum += ttc_score(ego_cv, fp, forecasts, h);
  }
  b.s_ttc = ego.empty() ? 1.0 : ttc_sum / static_cast<double>(ego.size());
  b.s_comfort = comfort_score(ego, cfg.comfort);
  b.s_perf = performance_score(b.s_progress, b.s_ttc, b.s_comfort, cfg.weights);
  b.s_total = total_score(b).s_total;
  return b;
}

/// Realized history needed for post-hoc rescoring.
struct Rollout
{
  ScenarioResult result;
  std::vector<std::vector<Agent>> agent_history;
};

inline Rollout simulate(const Scenario & sc, const SimConfig & cfg)
{
  const std::size_t n = cfg.ticks_for(sc);
  const auto graph = build_graph(sc, cfg);

  Rollout ro;
  ScenarioResult & r = ro.result;
  r.scenario = sc.name;
  r.type = sc.type;
  r.variant = cfg.variant;
  r.mode = cfg.mode;
  r.ticks.reserve(n);

  SimState st = initial_state(sc, cfg);
  std::vector<TrajectorySample> ego_samples;
  std::set<std::string> at_fault;
  const auto record_state = [&](const SimState & s) {
    const auto & e = s.world.ego;
    ego_samples.push_back({s.world.time, e.pose, e.speed, e.acceleration});
    ro.agent_history.push_back(s.world.agents);
  };
  record_state(st);

  RunMetrics & m = r.metrics;
  for (std::size_t k = 0; k < n; ++k) {
    auto res = step(sc, st, *graph, cfg);

    TickRecord rec;
    rec.selection = classify_selection(res.trace);
    const auto ctx = make_scoring_context(st.world, res.plan.horizon(), res.plan.dt());
    rec.online = score_trajectory(res.plan, ctx, cfg.scoring);
    switch (rec.selection) {
      case Selection::stub:
        ++m.selection.stub;
        break;
      case Selection::pdm:
        ++m.selection.pdm;
        break;
      case Selection::tie:
        ++m.selection.tie;
        break;
      case Selection::fallback:
        ++m.fallback_ticks;
        break;
    }

    const auto failed = [&res](const char * name) {
      const auto * e = res.trace.find(name);
      return e != nullptr && e->verdict && !e->verdict->passed;
    };
    const bool has_stub = res.trace.find(kStubName) != nullptr;
    const bool has_pdm = res.trace.find(kPdmName) != nullptr;
    const bool stub_failed = failed(kStubName);
    const bool pdm_failed = failed(kPdmName);
    auto & vf = m.verification_fails;
    vf.stub_total += stub_failed ? 1 : 0;
    vf.pdm_total += pdm_failed ? 1 : 0;
    const bool all_failed = (has_stub || has_pdm) && (!has_stub || stub_failed) && (!has_pdm || pdm_failed);
    if (all_failed) {
      ++vf.both;
    } else if (stub_failed) {
      ++vf.stub_only;
    } else if (pdm_failed) {
      ++vf.pdm_only;
    }
    vf.at_least_one += (stub_failed || pdm_failed) ? 1 : 0;
    rec.trace = std::move(res.trace);
    r.ticks.push_back(std::move(rec));

    st = std::move(res.next);
    record_state(st);

    // realized contacts at the new time
    const auto & ego = st.world.ego;
    const auto ego_poly = footprint_polygon(ego.pose, ego.footprint);
    bool agent_overlap = false;
    const auto & agents = st.world.agents;
    for (std::size_t i = 0; i < agents.size(); ++i) {
      const auto & a = agents[i];
      const auto a_poly = footprint_polygon(a.pose, a.footprint);
      if (convex_polygons_overlap(ego_poly, a_poly) &&
          classify_at_fault({ego.pose, ego.speed, ego.footprint}, {a.pose, a.speed, a.footprint})) {
        at_fault.insert(a.id);
      }
      for (std::size_t j = i + 1; j < agents.size(); ++j) {
        const auto & b = agents[j];
        if (convex_polygons_overlap(a_poly, footprint_polygon(b.pose, b.footprint))) {
          agent_overlap = true;
        }
      }
    }
    m.agent_overlaps += agent_overlap ? 1 : 0;
  }

  m.total_ticks = n;
  m.at_fault_collisions = at_fault.size();
  m.eb_rate = static_cast<double>(m.fallback_ticks) / static_cast<double>(n);
  r.collided_with.assign(at_fault.begin(), at_fault.end());
  r.ego_history = Trajectory(cfg.sim_dt, std::move(ego_samples));
  r.progress = route_progress(r.ego_history, *sc.route);
  return ro;
}

/// Applies the post-hoc score to a rollout against the given progress reference.
inline void finalize_score(Rollout & ro, const Scenario & sc, double reference_progress, const ScoringConfig & cfg)
{
  ro.result.post_hoc = post_hoc_score(ro.result, sc, ro.agent_history, reference_progress, cfg);
  ro.result.metrics.score = ro.result.post_hoc.s_total;
  ro.result.metrics.zero_score = ro.result.post_hoc.s_total == 0.0 ? 1 : 0;
}

/// Full closed-loop rollout with post-hoc scoring. Progress is normalized by the run itself unless
/// a reference progress is supplied.
inline ScenarioResult run_scenario(
  const Scenario & sc, const SimConfig & cfg, double reference_progress = 0.0)
{
  auto ro = simulate(sc, cfg);
  finalize_score(ro, sc, reference_progress, cfg.scoring);
  return std::move(ro.result);
}

}  // namespace agplan

#endif  // AGPLAN__SIM_HPP_
