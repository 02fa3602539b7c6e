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

#ifndef AGPLAN__TRACE_IO_HPP_
#define AGPLAN__TRACE_IO_HPP_

#include "agplan/arbitration.hpp"
#include "agplan/scoring.hpp"

#include <nlohmann/json.hpp>

#include <string>
#include <utility>

namespace agplan
{

using Json = nlohmann::ordered_json;

inline Json to_json(const arbitration::Verdict & v)
{
  Json j;
  j["passed"] = v.passed;
  j["reason"] = v.reason;
  j["time"] = v.time ? Json(*v.time) : Json(nullptr);
  j["subject"] = v.subject;
  return j;
}

inline arbitration::Verdict verdict_from_json(const Json & j)
{
  arbitration::Verdict v;
  v.passed = j.at("passed").get<bool>();
  v.reason = j.at("reason").get<std::string>();
  if (!j.at("time").is_null()) {
    v.time = j.at("time").get<double>();
  }
  v.subject = j.at("subject").get<std::string>();
  return v;
}

inline Json to_json(const arbitration::TraceEntry & e)
{
  Json j;
  j["name"] = e.name;
  j["depth"] = e.depth;
  j["arbitrator"] = e.is_arbitrator;
  j["last_resort"] = e.last_resort;
  j["evaluated"] = e.evaluated;
  j["applicable"] = e.applicable;
  j["verdict"] = e.verdict ? to_json(*e.verdict) : Json(nullptr);
  j["cost"] = e.cost ? Json(*e.cost) : Json(nullptr);
  Json metrics = Json::array();
  for (const auto & [k, v] : e.metrics) {
    metrics.push_back(Json::array({k, v}));
  }
  j["metrics"] = std::move(metrics);
  j["selected"] = e.selected;
  return j;
}

inline arbitration::TraceEntry entry_from_json(const Json & j)
{
  arbitration::TraceEntry e;
  e.name = j.at("name").get<std::string>();
  e.depth = j.at("depth").get<int>();
  e.is_arbitrator = j.at("arbitrator").get<bool>();
  e.last_resort = j.at("last_resort").get<bool>();
  e.evaluated = j.at("evaluated").get<bool>();
  e.applicable = j.at("applicable").get<bool>();
  if (!j.at("verdict").is_null()) {
    e.verdict = verdict_from_json(j.at("verdict"));
  }
  if (!j.at("cost").is_null()) {
    e.cost = j.at("cost").get<double>();
  }
  for (const auto & m : j.at("metrics")) {
    e.metrics.emplace_back(m.at(0).get<std::string>(), m.at(1).get<double>());
  }
  e.selected = j.at("selected").get<bool>();
  return e;
}

inline Json to_json(const arbitration::DecisionTrace & t)
{
  Json j;
  j["tick"] = t.tick;
  j["fallback"] = t.fallback_engaged;
  j["verification_calls"] = t.verification_calls;
  Json entries = Json::array();
  for (const auto & e : t.entries) {
    entries.push_back(to_json(e));
  }
  j["entries"] = std::move(entries);
  return j;
}

inline arbitration::DecisionTrace trace_from_json(const Json & j)
{
  arbitration::DecisionTrace t;
  t.tick = j.at("tick").get<std::size_t>();
  t.fallback_engaged = j.at("fallback").get<bool>();
  t.verification_calls = j.at("verification_calls").get<std::size_t>();
  for (const auto & e : j.at("entries")) {
    t.entries.push_back(entry_from_json(e));
  }
  return t;
}

inline Json to_json(const ScoreBreakdown & b)
{
  Json j;
  j["s_total"] = b.s_total;
  j["s_coll"] = b.s_coll;
  j["s_driv"] = b.s_driv;
  j["s_dir"] = b.s_dir;
  j["g_prog"] = b.g_prog;
  j["s_perf"] = b.s_perf;
  j["s_progress"] = b.s_progress;
  j["s_ttc"] = b.s_ttc;
  j["s_comfort"] = b.s_comfort;
  j["progress_ratio"] = b.progress_ratio;
  return j;
}

}  // namespace agplan

#endif  // AGPLAN__TRACE_IO_HPP_
