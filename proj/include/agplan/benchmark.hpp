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

#ifndef AGPLAN__BENCHMARK_HPP_
#define AGPLAN__BENCHMARK_HPP_

#include "agplan/arbitration.hpp"
#include "agplan/scenario.hpp"
#include "agplan/sim.hpp"
#include "agplan/trace_io.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace agplan
{

class ReportIoError : public std::runtime_error
{
public:
  explicit ReportIoError(const std::string & what) : std::runtime_error(what) {}
};

struct BenchmarkConfig
{
  std::vector<GraphVariant> variants{
    GraphVariant::full, GraphVariant::no_verify, GraphVariant::stub_only, GraphVariant::pdm_only};
  SimConfig base;  // variant is overridden per run
};

struct VariantAggregate
{
  GraphVariant variant = GraphVariant::full;
  std::size_t scenarios = 0;
  double mean_score = 0.0;
  std::size_t at_fault_collisions = 0;
  std::size_t zero_score = 0;
  std::size_t fallback_ticks = 0;
  std::size_t total_ticks = 0;
  double eb_rate = 0.0;
  SelectionCounts selection;
  VerificationFailCounts verification_fails;
};

struct BenchmarkReport
{
  SimMode mode = SimMode::reactive;
  std::uint64_t seed = 0;
  std::vector<GraphVariant> variants;
  std::vector<ScenarioResult> results;  // scenario-major, variants in configured order
  std::vector<VariantAggregate> aggregates;

  const ScenarioResult * find(const std::string & scenario, GraphVariant v) const
  {
    for (const auto & r : results) {
      if (r.scenario == scenario && r.variant == v) {
        return &r;
      }
    }
    return nullptr;
  }
};

inline VariantAggregate aggregate(GraphVariant v, const std::vector<const ScenarioResult *> & runs)
{
  VariantAggregate a;
  a.variant = v;
  a.scenarios = runs.size();
  double score_sum = 0.0;
  for (const auto * r : runs) {
    const auto & m = r->metrics;
    score_sum += m.score;
    a.at_fault_collisions += m.at_fault_collisions;
    a.zero_score += m.zero_score;
    a.fallback_ticks += m.fallback_ticks;
    a.total_ticks += m.total_ticks;
    a.selection.stub += m.selection.stub;
    a.selection.pdm += m.selection.pdm;
    a.selection.tie += m.selection.tie;
    auto & f = a.verification_fails;
    f.stub_only += m.verification_fails.stub_only;
    f.pdm_only += m.verification_fails.pdm_only;
    f.both += m.verification_fails.both;
    f.at_least_one += m.verification_fails.at_least_one;
    f.stub_total += m.verification_fails.stub_total;
    f.pdm_total += m.verification_fails.pdm_total;
  }
  a.mean_score = runs.empty() ? 0.0 : score_sum / static_cast<double>(runs.size());
  a.eb_rate = a.total_ticks == 0 ? 0.0 : static_cast<double>(a.fallback_ticks) / static_cast<double>(a.total_ticks);
  return a;
}

/// Runs every scenario under every variant. Post-hoc progress is normalized by the best progress
/// any variant achieved on the same scenario.
inline BenchmarkReport run_benchmark(const std::vector<Scenario> & scenarios, const BenchmarkConfig & cfg)
{
  if (scenarios.empty()) {
    throw std::invalid_argument("benchmark needs at least one scenario");
  }
  BenchmarkReport report;
  report.mode = cfg.base.mode;
  report.seed = cfg.base.seed;
  report.variants = cfg.variants;
  for (const auto & sc : scenarios) {
    std::vector<Rollout> rollouts;
    double best = 0.0;
    for (const auto v : cfg.variants) {
      SimConfig sim = cfg.base;
      sim.variant = v;
      rollouts.push_back(simulate(sc, sim));
      best = std::max(best, rollouts.back().result.progress);
    }
    for (auto & ro : rollouts) {
      finalize_score(ro, sc, best, cfg.base.scoring);
      report.results.push_back(std::move(ro.result));
    }
  }
  for (const auto v : cfg.variants) {
    std::vector<const ScenarioResult *> runs;
    for (const auto & r : report.results) {
      if (r.variant == v) {
        runs.push_back(&r);
      }
    }
    report.aggregates.push_back(aggregate(v, runs));
  }
  return report;
}

namespace detail
{

inline std::string fixed(double x, int digits = 6)
{
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, x);
  return buf;
}

inline std::ofstream open_for_write(const std::filesystem::path & path)
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw ReportIoError("cannot write " + path.string());
  }
  return out;
}

inline void check_written(std::ofstream & out, const std::filesystem::path & path)
{
  out.flush();
  if (!out) {
    throw ReportIoError("failed while writing " + path.string());
  }
}

}  // namespace detail

inline Json metrics_to_json(const RunMetrics & m)
{
  Json j;
  j["score"] = m.score;
  j["at_fault_collisions"] = m.at_fault_collisions;
  j["zero_score"] = m.zero_score;
  j["eb_rate"] = m.eb_rate;
  j["selection"] = {{"stub", m.selection.stub}, {"pdm", m.selection.pdm}, {"tie", m.selection.tie}};
  const auto & f = m.verification_fails;
  j["verification_fails"] = {
    {"stub_only", f.stub_only}, {"pdm_only", f.pdm_only},     {"both", f.both},
    {"at_least_one", f.at_least_one}, {"stub_total", f.stub_total}, {"pdm_total", f.pdm_total}};
  j["fallback_ticks"] = m.fallback_ticks;
  j["total_ticks"] = m.total_ticks;
  j["agent_overlap_ticks"] = m.agent_overlaps;
  return j;
}

inline Json report_to_json(const BenchmarkReport & report)
{
  Json j;
  j["mode"] = to_string(report.mode);
  j["seed"] = report.seed;
  Json aggs = Json::array();
  for (const auto & a : report.aggregates) {
    Json x;
    x["variant"] = to_string(a.variant);
    x["scenarios"] = a.scenarios;
    x["mean_score"] = a.mean_score;
    x["at_fault_collisions"] = a.at_fault_collisions;
    x["zero_score_scenarios"] = a.zero_score;
    x["eb_rate"] = a.eb_rate;
    x["fallback_ticks"] = a.fallback_ticks;
    x["total_ticks"] = a.total_ticks;
    x["selection"] = {{"stub", a.selection.stub}, {"pdm", a.selection.pdm}, {"tie", a.selection.tie}};
    const auto & f = a.verification_fails;
    x["verification_fails"] = {
      {"stub_only", f.stub_only}, {"pdm_only", f.pdm_only},     {"both", f.both},
      {"at_least_one", f.at_least_one}, {"stub_total", f.stub_total}, {"pdm_total", f.pdm_total}};
    aggs.push_back(std::move(x));
  }
  j["variants"] = std::move(aggs);
  Json runs = Json::array();
  for (const auto & r : report.results) {
    Json x;
    x["scenario"] = r.scenario;
    x["type"] = r.type;
    x["variant"] = to_string(r.variant);
    x["metrics"] = metrics_to_json(r.metrics);
    x["post_hoc"] = to_json(r.post_hoc);
    x["progress"] = r.progress;
    x["collided_with"] = r.collided_with;
    runs.push_back(std::move(x));
  }
  j["runs"] = std::move(runs);
  return j;
}

/// Writes the per-tick trace records of one run as JSON lines. Ticks with a fallback or a
/// rejection get an extra record carrying the rendered decision tree.
inline void export_trace_log(const ScenarioResult & r, std::ostream & out)
{
  for (const auto & rec : r.ticks) {
    const auto & t = rec.trace;
    Json tick;
    tick["record"] = "tick";
    tick["scenario"] = r.scenario;
    tick["variant"] = to_string(r.variant);
    tick["time"] = static_cast<double>(t.tick) * r.ego_history.dt();
    tick["selection"] = to_string(rec.selection);
    if (t.tick < r.ego_history.size()) {
      const auto & e = r.ego_history[t.tick];
      tick["ego"] = {{"x", e.pose.x}, {"y", e.pose.y}, {"heading", e.pose.heading}, {"speed", e.speed}};
    }
    tick["score"] = to_json(rec.online);
    tick["trace"] = to_json(t);
    out << tick.dump() << '\n';

    const auto tree = arbitration::render_trace(t);
    for (const auto & e : t.entries) {
      if (e.verdict && !e.verdict->passed) {
        Json rej;
        rej["record"] = "rejection";
        rej["scenario"] = r.scenario;
        rej["variant"] = to_string(r.variant);
        rej["tick"] = t.tick;
        rej["behavior"] = e.name;
        rej["reason"] = e.verdict->reason;
        rej["tree"] = tree;
        out << rej.dump() << '\n';
      }
    }
    if (t.fallback_engaged) {
      const auto * chosen = t.selected_behavior();
      Json fb;
      fb["record"] = "fallback";
      fb["scenario"] = r.scenario;
      fb["variant"] = to_string(r.variant);
      fb["tick"] = t.tick;
      fb["behavior"] = chosen ? chosen->name : std::string{};
      fb["tree"] = tree;
      out << fb.dump() << '\n';
    }
  }
}

inline std::filesystem::path trace_log_path(const std::filesystem::path & dir, const ScenarioResult & r)
{
  return dir / (r.scenario + "__" + to_string(r.variant) + ".jsonl");
}

inline void export_trace_log(const ScenarioResult & r, const std::filesystem::path & path)
{
  auto out = detail::open_for_write(path);
  export_trace_log(r, out);
  detail::check_written(out, path);
}

/// report.json, the ablation table (ablation.csv), the per-type table (by_type.csv), selection
/// distribution (selection.csv), online score over time (score_over_time.csv) and trace logs.
inline void write_report(const BenchmarkReport & report, const std::filesystem::path & dir)
{
  std::error_code ec;
  std::filesystem::create_directories(dir / "traces", ec);
  if (ec) {
    throw ReportIoError("cannot create " + (dir / "traces").string() + ": " + ec.message());
  }

  {
    const auto path = dir / "report.json";
    auto out = detail::open_for_write(path);
    out << report_to_json(report).dump(2) << '\n';
    detail::check_written(out, path);
  }
  {
    const auto path = dir / "ablation.csv";
    auto out = detail::open_for_write(path);
    out << "variant,mean_score,at_fault_collisions,zero_score_scenarios,eb_rate_percent\n";
    for (const auto & a : report.aggregates) {
      out << to_string(a.variant) << ',' << detail::fixed(a.mean_score, 4) << ',' << a.at_fault_collisions << ','
          << a.zero_score << ',' << detail::fixed(100.0 * a.eb_rate, 2) << '\n';
    }
    detail::check_written(out, path);
  }
  {
    const auto path = dir / "by_type.csv";
    auto out = detail::open_for_write(path);
    std::map<std::string, std::map<GraphVariant, std::pair<double, std::size_t>>> by_type;
    for (const auto & r : report.results) {
      auto & cell = by_type[r.type][r.variant];
      cell.first += r.metrics.score;
      ++cell.second;
    }
    out << "type";
    for (const auto v : report.variants) {
      out << ',' << to_string(v);
    }
    out << '\n';
    for (const auto & [type, cells] : by_type) {
      out << type;
      for (const auto v : report.variants) {
        const auto it = cells.find(v);
        const double mean = it == cells.end() ? 0.0 : it->second.first / static_cast<double>(it->second.second);
        out << ',' << detail::fixed(mean, 4);
      }
      out << '\n';
    }
    detail::check_written(out, path);
  }
  {
    const auto path = dir / "selection.csv";
    auto out = detail::open_for_write(path);
    out << "variant,stub,pdm,tie,fallback,total\n";
    for (const auto & a : report.aggregates) {
      out << to_string(a.variant) << ',' << a.selection.stub << ',' << a.selection.pdm << ',' << a.selection.tie << ','
          << a.fallback_ticks << ',' << a.total_ticks << '\n';
    }
    detail::check_written(out, path);
  }
  {
    const auto path = dir / "score_over_time.csv";
    auto out = detail::open_for_write(path);
    out << "scenario,variant,tick,time,selection,s_total\n";
    for (const auto & r : report.results) {
      for (const auto & rec : r.ticks) {
        out << r.scenario << ',' << to_string(r.variant) << ',' << rec.trace.tick << ','
            << detail::fixed(static_cast<double>(rec.trace.tick) * r.ego_history.dt(), 1) << ','
            << to_string(rec.selection) << ',' << detail::fixed(rec.online.s_total) << '\n';
      }
    }
    detail::check_written(out, path);
  }
  for (const auto & r : report.results) {
    export_trace_log(r, trace_log_path(dir / "traces", r));
  }
}

}  // namespace agplan

#endif  // AGPLAN__BENCHMARK_HPP_
