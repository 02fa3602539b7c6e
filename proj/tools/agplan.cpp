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

// Command line front end: run one scenario, benchmark a suite, or re-render a logged tick.

#include "agplan/benchmark.hpp"
#include "agplan/scenario.hpp"
#include "agplan/sim.hpp"
#include "agplan/trace_io.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace
{

struct CommonOptions
{
  std::string mode = "reactive";
  std::optional<double> duration;
  std::uint64_t seed = 0;
  std::string verification = "on";
  std::string out_dir;
};

void add_common(CLI::App * cmd, CommonOptions & opt)
{
  cmd->add_option("--mode", opt.mode, "Background agents: reactive or non_reactive")
    ->check(CLI::IsMember({"reactive", "non_reactive"}));
  cmd->add_option("--duration", opt.duration, "Override the scenario duration in seconds");
  cmd->add_option("--seed", opt.seed, "Seed for the proposal bank perturbation");
  cmd->add_option("--verification", opt.verification, "Enable pre-selection verification")
    ->check(CLI::IsMember({"on", "off"}));
  cmd->add_option("-o,--out", opt.out_dir, "Output directory for reports and trace logs");
}

agplan::SimConfig make_config(const CommonOptions & opt)
{
  agplan::SimConfig cfg;
  cfg.mode = agplan::parse_mode(opt.mode);
  cfg.duration = opt.duration;
  cfg.seed = opt.seed;
  cfg.verification_enabled = opt.verification == "on";
  return cfg;
}

void print_metrics(const agplan::ScenarioResult & r)
{
  const auto & m = r.metrics;
  std::printf(
    "%-28s %-10s score=%.4f collisions=%zu eb=%.2f%% stub=%zu pdm=%zu tie=%zu fallback=%zu/%zu\n",
    r.scenario.c_str(), agplan::to_string(r.variant).c_str(), m.score, m.at_fault_collisions, 100.0 * m.eb_rate,
    m.selection.stub, m.selection.pdm, m.selection.tie, m.fallback_ticks, m.total_ticks);
}

int cmd_run(const std::string & scenario_path, const std::string & variant, const CommonOptions & opt)
{
  const auto scenario = agplan::load_scenario(scenario_path);
  auto cfg = make_config(opt);
  cfg.variant = agplan::parse_variant(variant);
  const auto result = agplan::run_scenario(scenario, cfg);
  print_metrics(result);
  for (const auto & rec : result.ticks) {
    const bool rejected = std::any_of(rec.trace.entries.begin(), rec.trace.entries.end(), [](const auto & e) {
      return e.verdict && !e.verdict->passed;
    });
    if (rec.trace.fallback_engaged || rejected) {
      std::cout << agplan::arbitration::render_trace(rec.trace);
    }
  }
  if (!opt.out_dir.empty()) {
    std::filesystem::create_directories(opt.out_dir);
    const auto path = agplan::trace_log_path(opt.out_dir, result);
    agplan::export_trace_log(result, path);
    std::cout << "trace log: " << path.string() << '\n';
  }
  return result.metrics.at_fault_collisions == 0 ? 0 : 2;
}

int cmd_bench(const std::string & dir, const std::vector<std::string> & variants, const CommonOptions & opt)
{
  const auto suite = agplan::load_suite(dir);
  agplan::BenchmarkConfig cfg;
  cfg.base = make_config(opt);
  if (!variants.empty()) {
    cfg.variants.clear();
    for (const auto & v : variants) {
      cfg.variants.push_back(agplan::parse_variant(v));
    }
  }
  const auto t0 = std::chrono::steady_clock::now();
  const auto report = agplan::run_benchmark(suite, cfg);
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  for (const auto & r : report.results) {
    print_metrics(r);
  }
  std::printf("\n%-10s %10s %10s %10s %8s\n", "variant", "score", "collisions", "zero", "EB %");
  for (const auto & a : report.aggregates) {
    std::printf(
      "%-10s %10.4f %10zu %10zu %8.2f\n", agplan::to_string(a.variant).c_str(), a.mean_score, a.at_fault_collisions,
      a.zero_score, 100.0 * a.eb_rate);
  }
  std::printf("\n%zu scenarios x %zu variants in %.2f s\n", suite.size(), cfg.variants.size(), elapsed);
  if (!opt.out_dir.empty()) {
    agplan::write_report(report, opt.out_dir);
    std::cout << "report written to " << opt.out_dir << '\n';
  }
  return 0;
}

int cmd_trace(const std::string & log, std::size_t tick)
{
  std::ifstream in(log);
  if (!in) {
    std::cerr << "cannot open " << log << '\n';
    return 1;
  }
  std::string line;
  while (std::getline(in, line)) {
    const auto j = agplan::Json::parse(line);
    if (j.at("record") != "tick" || j.at("trace").at("tick").get<std::size_t>() != tick) {
      continue;
    }
    std::cout << j.at("scenario").get<std::string>() << " / " << j.at("variant").get<std::string>() << '\n';
    std::cout << agplan::arbitration::render_trace(agplan::trace_from_json(j.at("trace")));
    std::printf("executed plan s_total=%.6f\n", j.at("score").at("s_total").get<double>());
    return 0;
  }
  std::cerr << "tick " << tick << " not found in " << log << '\n';
  return 1;
}

}  // namespace

int main(int argc, char ** argv)
{
  CLI::App app{"Arbitration-graph planning simulator"};
  app.require_subcommand(1);

  CommonOptions run_opt;
  std::string scenario_path;
  std::string variant = "full";
  auto * run = app.add_subcommand("run", "Simulate one scenario with one graph variant");
  run->add_option("scenario", scenario_path, "Scenario YAML file")->required()->check(CLI::ExistingFile);
  run->add_option("--variant", variant, "full, no_verify, stub_only or pdm_only")
    ->check(CLI::IsMember({"full", "no_verify", "stub_only", "pdm_only"}));
  add_common(run, run_opt);

  CommonOptions bench_opt;
  std::string suite_dir = "scenarios";
  std::vector<std::string> variants;
  auto * bench = app.add_subcommand("bench", "Run a scenario suite against several graph variants");
  bench->add_option("suite", suite_dir, "Directory of scenario YAML files")->check(CLI::ExistingDirectory);
  bench->add_option("--variants", variants, "Subset of variants to run")
    ->check(CLI::IsMember({"full", "no_verify", "stub_only", "pdm_only"}));
  add_common(bench, bench_opt);

  std::string log_path;
  std::size_t tick = 0;
  auto * trace = app.add_subcommand("trace", "Re-render the decision tree of a logged tick");
  trace->add_option("log", log_path, "Trace log (.jsonl)")->required()->check(CLI::ExistingFile);
  trace->add_option("--tick", tick, "Tick index")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      return cmd_run(scenario_path, variant, run_opt);
    }
    if (bench->parsed()) {
      return cmd_bench(suite_dir, variants, bench_opt);
    }
    return cmd_trace(log_path, tick);
  } catch (const std::exception & e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
