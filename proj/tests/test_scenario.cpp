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

#include "agplan/scenario.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <string>

namespace
{

const std::string kMinimal = R"(
name: tiny
type: lead_follow
duration: 5.0
lanes:
  - id: a
    speed_limit: 10
    centerline: [[0, 0], [100, 0]]
  - id: b
    width: 3.0
    centerline: [[100, 0], [150, 20]]
route: [a, b]
ego: {s: 5, speed: 4}
agents:
  - id: lead
    path: {lane: a}
    s: 30
    speed: 5
  - id: walker
    policy: scripted
    length: 0.6
    width: 0.6
    path: {points: [[60, -5], [60, 5]]}
    speed: [[0, 0], [2, 1.5]]
    active_from: 1.0
    active_until: 4.0
stub:
  noise: 0.1
  scripts:
    - {name: cruise, target_speed: 9, preference: 1}
    - {name: dodge, type: nudge, offset: 1.0, nudge_start_s: 20, nudge_end_s: 40}
    - {name: halt, type: stop, stop_s: 50, yield: false}
expect: {stub_fails: true}
)";

std::string replace(std::string text, const std::string & from, const std::string & to)
{
  const auto pos = text.find(from);
  EXPECT_NE(pos, std::string::npos) << from;
  return text.replace(pos, from.size(), to);
}

}  // namespace

TEST(ParseScenario, MinimalDocument)
{
  const auto sc = agplan::parse_scenario(kMinimal, "tiny.yaml");
  EXPECT_EQ(sc.name, "tiny");
  EXPECT_EQ(sc.type, "lead_follow");
  EXPECT_EQ(sc.duration, 5.0);
  EXPECT_EQ(sc.sim_dt, 0.1);
  ASSERT_EQ(sc.map->lanes().size(), 2u);
  EXPECT_EQ(sc.map->lanes()[1].width, 3.0);
  EXPECT_EQ(sc.map->lanes()[1].speed_limit, 13.89);
  EXPECT_NEAR(sc.route->length(), 100.0 + std::hypot(50.0, 20.0), 1e-9);
  EXPECT_EQ(sc.ego.start_s, 5.0);
  EXPECT_EQ(sc.ego.speed, 4.0);

  ASSERT_EQ(sc.agents.size(), 2u);
  EXPECT_EQ(sc.agents[0].policy, agplan::AgentPolicy::idm_reactive);
  EXPECT_EQ(sc.agents[0].speed.at(7.0), 5.0);
  EXPECT_EQ(sc.agents[1].policy, agplan::AgentPolicy::scripted);
  EXPECT_EQ(sc.agents[1].footprint.length, 0.6);
  EXPECT_NEAR(sc.agents[1].speed.at(1.0), 0.75, 1e-12);
  EXPECT_FALSE(sc.agents[1].active_at(0.5));
  EXPECT_TRUE(sc.agents[1].active_at(1.0));
  EXPECT_FALSE(sc.agents[1].active_at(4.0));

  ASSERT_EQ(sc.bank.scripts.size(), 3u);
  EXPECT_EQ(sc.bank.noise_amplitude, 0.1);
  EXPECT_EQ(sc.bank.scripts[1].type, agplan::ManeuverType::nudge);
  EXPECT_EQ(sc.bank.scripts[2].stop_s, 50.0);
  EXPECT_FALSE(sc.bank.scripts[2].yield);
  EXPECT_TRUE(sc.expect.stub_fails);
  EXPECT_FALSE(sc.expect.pdm_fails);
}

TEST(ParseScenario, RejectsInvalidDocuments)
{
  const std::vector<std::pair<std::string, std::string>> edits{
    {"name: tiny\n", ""},
    {"route: [a, b]", "route: [b, a]"},
    {"route: [a, b]", "route: [a, c]"},
    {"id: walker", "id: lead"},
    {"path: {lane: a}", "path: {lane: z}"},
    {"policy: scripted", "policy: telepathic"},
    {"[[0, 0], [2, 1.5]]", "[[2, 0], [1, 1.5]]"},
    {"[[0, 0], [2, 1.5]]", "[[0, -1]]"},
    {"ego: {s: 5, speed: 4}", "ego: {s: 5, lateral: 9, speed: 4}"},
    {"ego: {s: 5, speed: 4}", "ego: {s: 500, speed: 4}"},
    {"duration: 5.0", "duration: 0"},
    {"type: nudge, offset", "type: wiggle, offset"},
    {"nudge_end_s: 40", "nudge_end_s: 10"},
    {"centerline: [[0, 0], [100, 0]]", "centerline: [[0, 0], [0, 0], [100, 0]]"},
    {"lanes:", "lanes: oops\nx:"},
  };
  for (const auto & [from, to] : edits) {
    EXPECT_THROW(agplan::parse_scenario(replace(kMinimal, from, to)), agplan::ScenarioInvalid) << from << " -> " << to;
  }
  EXPECT_THROW(agplan::parse_scenario("[1, 2"), agplan::ScenarioInvalid);
  EXPECT_THROW(agplan::parse_scenario("- just a list"), agplan::ScenarioInvalid);
}

TEST(ParseScenario, ErrorsNameTheSource)
{
  try {
    agplan::parse_scenario(replace(kMinimal, "id: walker", "id: lead"), "dup.yaml");
    FAIL() << "expected ScenarioInvalid";
  } catch (const agplan::ScenarioInvalid & e) {
    EXPECT_NE(std::string(e.what()).find("dup.yaml"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("duplicate"), std::string::npos);
  }
}

TEST(SpeedProfile, PiecewiseLinearAndHeld)
{
  const agplan::SpeedProfile p({{1.0, 2.0}, {3.0, 6.0}});
  EXPECT_EQ(p.at(0.0), 2.0);
  EXPECT_EQ(p.at(2.0), 4.0);
  EXPECT_EQ(p.at(10.0), 6.0);
}

TEST(LoadScenario, MissingFile)
{
  EXPECT_THROW(agplan::load_scenario("/nonexistent/none.yaml"), agplan::ScenarioInvalid);
}

TEST(ShippedSuite, LoadsAndHasComplementaryExpectations)
{
  const auto suite = agplan::load_suite(AGPLAN_SCENARIO_DIR);
  ASSERT_GE(suite.size(), 14u);
  std::set<std::string> names;
  std::set<std::string> types;
  int stub_fails = 0;
  int pdm_fails = 0;
  int both = 0;
  for (const auto & sc : suite) {
    EXPECT_TRUE(names.insert(sc.name).second) << sc.name;
    types.insert(sc.type);
    const double ticks = sc.duration / sc.sim_dt;
    EXPECT_NEAR(ticks, std::round(ticks), 1e-9) << sc.name;
    stub_fails += sc.expect.stub_fails ? 1 : 0;
    pdm_fails += sc.expect.pdm_fails ? 1 : 0;
    both += (sc.expect.stub_fails && sc.expect.pdm_fails) ? 1 : 0;
  }
  EXPECT_GE(types.size(), 10u);
  EXPECT_GE(stub_fails, 2);
  EXPECT_GE(pdm_fails, 2);
  EXPECT_EQ(both, 1);
}
