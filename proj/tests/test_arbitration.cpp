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

#include "agplan/arbitration.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace
{

namespace arb = agplan::arbitration;

// Toy world: which behaviors are applicable, which fail verification and how they score.
struct Situation
{
  std::set<std::string> inactive;
  std::set<std::string> rejected;
  std::map<std::string, double> score;
};

struct Command
{
  std::string source;
};

using Behavior = arb::Behavior<Situation, Command>;
using Cost = arb::CostArbitrator<Situation, Command>;
using Priority = arb::PriorityArbitrator<Situation, Command>;

class Toy : public Behavior
{
public:
  explicit Toy(std::string name, bool last_resort = false) : Behavior(std::move(name), last_resort) {}

  bool check_invocation(const Situation & s) const override { return s.inactive.count(name()) == 0; }

  Command get_command(const Situation & s) const override
  {
    ++proposals;
    if (s.inactive.count(name()) != 0) {
      ++proposals_while_inactive;
    }
    return {name()};
  }

  mutable std::atomic<int> proposals{0};
  mutable std::atomic<int> proposals_while_inactive{0};
};

struct Counters
{
  int verifications = 0;
};

arb::Arbitrator<Situation, Command>::Verifier make_verifier(const std::shared_ptr<Counters> & counters)
{
  return [counters](const Command & c, const Situation & s) {
    ++counters->verifications;
    if (s.rejected.count(c.source) != 0) {
      return arb::Verdict::fail("rejected " + c.source, 0.5, "agent");
    }
    return arb::Verdict::pass();
  };
}

arb::CostEvaluation score_cost(const Command & c, const Situation & s)
{
  const auto it = s.score.find(c.source);
  const double score = it == s.score.end() ? 0.0 : it->second;
  return {-score, {{"s_total", score}}};
}

struct Graph
{
  std::shared_ptr<Toy> stub = std::make_shared<Toy>("LearnedStub");
  std::shared_ptr<Toy> pdm = std::make_shared<Toy>("PdmLite");
  std::shared_ptr<Toy> estop = std::make_shared<Toy>("EmergencyStop", true);
  std::shared_ptr<Counters> counters = std::make_shared<Counters>();
  std::shared_ptr<Cost> composer;
  std::shared_ptr<Priority> root;

  Graph()
  {
    composer = std::make_shared<Cost>(
      "Composer", std::vector<Behavior::Ptr>{stub, pdm}, make_verifier(counters), score_cost);
    root = std::make_shared<Priority>(
      "Root", std::vector<Behavior::Ptr>{composer, estop}, make_verifier(counters));
  }
};

int selected_count(const arb::DecisionTrace & t)
{
  int n = 0;
  for (const auto & e : t.entries) {
    n += (e.selected && !e.is_arbitrator) ? 1 : 0;
  }
  return n;
}

}  // namespace

TEST(CostArbitrator, LowestCostWins)
{
  Graph g;
  const Situation s{{}, {}, {{"LearnedStub", 0.8}, {"PdmLite", 0.6}}};
  const auto out = g.composer->arbitrate(s);
  ASSERT_TRUE(out.command.has_value());
  EXPECT_EQ(out.command->source, "LearnedStub");
  const Situation t{{}, {}, {{"LearnedStub", 0.6}, {"PdmLite", 0.8}}};
  EXPECT_EQ(g.composer->arbitrate(t).command->source, "PdmLite");
}

TEST(CostArbitrator, TieGoesToFirstChild)
{
  Graph g;
  const Situation s{{}, {}, {{"LearnedStub", 0.7}, {"PdmLite", 0.7}}};
  EXPECT_EQ(g.composer->arbitrate(s).command->source, "LearnedStub");
}

TEST(CostArbitrator, AllRejectedIsInapplicable)
{
  Graph g;
  const Situation s{{}, {"LearnedStub", "PdmLite"}, {}};
  const auto out = g.composer->arbitrate(s);
  EXPECT_FALSE(out.command.has_value());
  EXPECT_FALSE(out.entries.front().applicable);
  EXPECT_EQ(out.verification_calls, 2u);
}

TEST(CostArbitrator, RequiresCostFunction)
{
  EXPECT_THROW(Cost("c", {}, {}, {}), std::invalid_argument);
}

TEST(PriorityArbitrator, FirstValidChildWinsAndLaterAreNotQueried)
{
  Graph g;
  const Situation s{{}, {}, {{"LearnedStub", 0.5}}};
  const auto r = arb::run_graph(*g.root, s);
  EXPECT_EQ(r.command.source, "LearnedStub");
  EXPECT_FALSE(r.trace.fallback_engaged);
  EXPECT_EQ(g.estop->proposals, 0);
  const auto * e = r.trace.find("EmergencyStop");
  ASSERT_NE(e, nullptr);
  EXPECT_EQ(e->status(), arb::NodeStatus::not_evaluated);
}

TEST(PriorityArbitrator, FallsBackToLastResort)
{
  Graph g;
  const Situation s{{}, {"LearnedStub", "PdmLite"}, {}};
  const auto r = arb::run_graph(*g.root, s);
  EXPECT_EQ(r.command.source, "EmergencyStop");
  EXPECT_TRUE(r.trace.fallback_engaged);
  EXPECT_EQ(r.trace.find("Composer")->status(), arb::NodeStatus::inapplicable);
  // the last resort is never verified
  EXPECT_FALSE(r.trace.find("EmergencyStop")->verdict.has_value());
  EXPECT_EQ(r.trace.verification_calls, 2u);
}

TEST(PriorityArbitrator, SingleVerifiedChild)
{
  auto only = std::make_shared<Toy>("Only");
  auto counters = std::make_shared<Counters>();
  const Priority p("p", {only}, make_verifier(counters));
  const auto r = arb::run_graph(p, Situation{});
  EXPECT_EQ(r.command.source, "Only");
  EXPECT_EQ(counters->verifications, 1);
}

TEST(RunGraph, BothVerifiedStubScoresHigher)
{
  Graph g;
  const Situation s{{}, {}, {{"LearnedStub", 0.9}, {"PdmLite", 0.8}}};
  const auto r = arb::run_graph(*g.root, s, 7);
  EXPECT_EQ(r.command.source, "LearnedStub");
  EXPECT_EQ(r.trace.tick, 7u);
  int verified = 0;
  for (const auto & e : r.trace.entries) {
    verified += (e.verdict && e.verdict->passed) ? 1 : 0;
  }
  EXPECT_EQ(verified, 2);
  // the composer's result is already verified, so the root does not check it again
  EXPECT_EQ(r.trace.verification_calls, 2u);
  EXPECT_EQ(g.counters->verifications, 2);
  EXPECT_FALSE(r.trace.find("Composer")->verdict.has_value());
}

TEST(RunGraph, OnlyEmergencyStop)
{
  auto estop = std::make_shared<Toy>("EmergencyStop", true);
  auto counters = std::make_shared<Counters>();
  const Priority root("Root", {estop}, make_verifier(counters));
  const auto r = arb::run_graph(root, Situation{});
  EXPECT_EQ(r.command.source, "EmergencyStop");
  EXPECT_TRUE(r.trace.fallback_engaged);
  EXPECT_EQ(r.trace.verification_calls, 0u);
  EXPECT_EQ(counters->verifications, 0);
}

TEST(RunGraph, MissingLastResortThrows)
{
  auto a = std::make_shared<Toy>("A");
  auto counters = std::make_shared<Counters>();
  const Priority root("Root", {a}, make_verifier(counters));
  EXPECT_THROW(arb::run_graph(root, Situation{{}, {"A"}, {}}), arb::NoValidOption);
}

TEST(RunGraph, ExhaustiveVerificationOutcomes)
{
  for (int mask = 0; mask < 4; ++mask) {
    const bool stub_ok = (mask & 1) != 0;
    const bool pdm_ok = (mask & 2) != 0;
    // the stub is given the worse score so that a single survivor wins regardless of cost
    Situation s{{}, {}, {{"LearnedStub", 0.3}, {"PdmLite", 0.9}}};
    if (!stub_ok) {
      s.rejected.insert("LearnedStub");
    }
    if (!pdm_ok) {
      s.rejected.insert("PdmLite");
    }
    Graph g;
    const auto r = arb::run_graph(*g.root, s);
    const std::string expected = pdm_ok ? "PdmLite" : (stub_ok ? "LearnedStub" : "EmergencyStop");
    EXPECT_EQ(r.command.source, expected) << "mask " << mask;
    EXPECT_EQ(r.trace.fallback_engaged, !stub_ok && !pdm_ok);
    EXPECT_EQ(selected_count(r.trace), 1);
    EXPECT_EQ(g.estop->proposals, (!stub_ok && !pdm_ok) ? 1 : 0);
  }
}

TEST(RunGraph, InactiveBehaviorNeverProposes)
{
  Graph g;
  const Situation s{{"LearnedStub"}, {}, {{"LearnedStub", 1.0}, {"PdmLite", 0.2}}};
  const auto r = arb::run_graph(*g.root, s);
  EXPECT_EQ(r.command.source, "PdmLite");
  EXPECT_EQ(g.stub->proposals, 0);
  const auto * e = r.trace.find("LearnedStub");
  EXPECT_EQ(e->status(), arb::NodeStatus::inapplicable);
  EXPECT_FALSE(e->verdict.has_value());
}

TEST(ArbitrationProperty, RandomTicksRespectGraphInvariants)
{
  std::mt19937_64 rng(67);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Graph g;
  int fallback_ticks = 0;
  for (std::size_t tick = 0; tick < 2000; ++tick) {
    Situation s;
    for (const std::string name : {"LearnedStub", "PdmLite"}) {
      if (u(rng) < 0.15) {
        s.inactive.insert(name);
      }
      if (u(rng) < 0.3) {
        s.rejected.insert(name);
      }
      // coarse grid produces frequent exact ties
      s.score[name] = std::floor(u(rng) * 5.0) / 4.0;
    }
    const auto r = arb::run_graph(*g.root, s, tick);
    fallback_ticks += r.trace.fallback_engaged ? 1 : 0;

    ASSERT_EQ(selected_count(r.trace), 1);
    const auto * sel = r.trace.selected_behavior();
    ASSERT_NE(sel, nullptr);
    ASSERT_EQ(sel->name, r.command.source);
    // gate completeness
    ASSERT_TRUE((sel->verdict && sel->verdict->passed) || sel->last_resort);
    ASSERT_EQ(r.trace.fallback_engaged, sel->last_resort);
    for (const auto & e : r.trace.entries) {
      if (e.cost && !e.is_arbitrator) {
        ASSERT_TRUE(e.verdict && e.verdict->passed) << e.name;
      }
    }
    // argmin with earliest-child tie break against a brute-force scan
    std::string best;
    double best_cost = 0.0;
    for (const std::string name : {"LearnedStub", "PdmLite"}) {
      if (s.inactive.count(name) == 0 && s.rejected.count(name) == 0 && (best.empty() || -s.score[name] < best_cost)) {
        best = name;
        best_cost = -s.score[name];
      }
    }
    ASSERT_EQ(best.empty() ? std::string("EmergencyStop") : best, r.command.source);
  }
  // lazy fallback
  EXPECT_EQ(g.estop->proposals, fallback_ticks);
  EXPECT_GT(fallback_ticks, 0);
  EXPECT_EQ(g.stub->proposals_while_inactive, 0);
  EXPECT_EQ(g.pdm->proposals_while_inactive, 0);
}

TEST(ArbitrationProperty, AddingChildNeverRaisesSelectedCost)
{
  std::mt19937_64 rng(71);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto counters = std::make_shared<Counters>();
  std::vector<std::shared_ptr<Toy>> pool;
  for (int i = 0; i < 6; ++i) {
    pool.push_back(std::make_shared<Toy>("b" + std::to_string(i)));
  }
  for (int round = 0; round < 300; ++round) {
    Situation s;
    for (const auto & b : pool) {
      s.score[b->name()] = u(rng);
      if (u(rng) < 0.3) {
        s.rejected.insert(b->name());
      }
    }
    std::vector<Behavior::Ptr> children;
    std::optional<double> prev;
    for (const auto & b : pool) {
      children.push_back(b);
      const Cost c("c", children, make_verifier(counters), score_cost);
      const auto out = c.arbitrate(s);
      if (!out.command) {
        ASSERT_FALSE(prev.has_value());
        continue;
      }
      const double cost = -s.score[out.command->source];
      if (prev) {
        ASSERT_LE(cost, *prev);
      }
      prev = cost;
    }
  }
}

TEST(ArbitrationProperty, SelectionInvariantUnderPositiveScaling)
{
  std::mt19937_64 rng(73);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_real_distribution<double> k(0.01, 100.0);
  Graph g;
  for (int i = 0; i < 500; ++i) {
    Situation s{{}, {}, {{"LearnedStub", u(rng)}, {"PdmLite", u(rng)}}};
    if (i % 5 == 0) {
      s.score["PdmLite"] = s.score["LearnedStub"];
    }
    const auto a = arb::run_graph(*g.root, s).command.source;
    const double scale = k(rng);
    for (auto & [name, v] : s.score) {
      v *= scale;
    }
    ASSERT_EQ(arb::run_graph(*g.root, s).command.source, a);
  }
}

TEST(RenderTrace, GlyphsAndMarkers)
{
  Graph g;
  const Situation s{{}, {"LearnedStub", "PdmLite"}, {}};
  const auto r = arb::run_graph(*g.root, s, 3);
  const auto text = arb::render_trace(r.trace);
  EXPECT_EQ(
    text,
    "tick 3\n"
    "✓ Root\n"
    "  − Composer [inapplicable]\n"
    "    ✗ LearnedStub [rejected: rejected LearnedStub]\n"
    "    ✗ PdmLite [rejected: rejected PdmLite]\n"
    "  ✓ EmergencyStop\n"
    "!! fallback engaged: EmergencyStop\n");
  EXPECT_EQ(arb::render_trace(r.trace), text);
}

TEST(RenderTrace, CostsAndNotEvaluated)
{
  Graph g;
  const Situation s{{}, {}, {{"LearnedStub", 0.25}, {"PdmLite", 0.5}}};
  const auto text = arb::render_trace(arb::run_graph(*g.root, s).trace);
  EXPECT_EQ(
    text,
    "tick 0\n"
    "✓ Root\n"
    "  ✓ Composer [cost=-0.500000]\n"
    "    · LearnedStub [cost=-0.250000]\n"
    "    ✓ PdmLite [cost=-0.500000]\n"
    "  · EmergencyStop\n");
}
