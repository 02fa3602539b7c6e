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

#ifndef AGPLAN__ARBITRATION_HPP_
#define AGPLAN__ARBITRATION_HPP_

// Generic arbitration graph engine.
//
// A graph is a tree of behavior components (leaves) and arbitrators (inner nodes). Every tick
// the root arbitrator is asked for a command. Arbitrators query the invocation condition of
// their children, collect proposals, verify them and pick one:
//
//   * CostArbitrator     - the verified option with minimal cost, ties go to the earliest child
//   * PriorityArbitrator - the first verified option in child order
//
// Options that fail verification are discarded and the arbitrator moves on. An arbitrator
// without any valid option is inapplicable, which lets a parent priority arbitrator fall
// through to a last-resort behavior. Last-resort behaviors are never verified and are only
// asked to propose when every preceding option failed.
//
// The engine records a DecisionTrace per tick: every node's applicability, verdict, cost and
// whether it lies on the selected path.

#include <cstdio>
#include <functional>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace agplan::arbitration
{

/// Outcome of a verification. `reason` is empty iff the command passed.
struct Verdict
{
  bool passed = true;
  std::string reason;
  std::optional<double> time;  // predicted violation time, seconds
  std::string subject;         // e.g. the colliding agent

  static Verdict pass() { return {}; }
  static Verdict fail(std::string reason, std::optional<double> time = std::nullopt, std::string subject = {})
  {
    return {false, std::move(reason), time, std::move(subject)};
  }
};

/// A cost value plus named metrics that explain it.
struct CostEvaluation
{
  double cost = 0.0;
  std::vector<std::pair<std::string, double>> metrics;
};

enum class NodeStatus { selected, rejected, inapplicable, not_evaluated, passed };

struct TraceEntry
{
  std::string name;
  int depth = 0;
  bool is_arbitrator = false;
  bool last_resort = false;
  bool evaluated = false;
  bool applicable = false;
  std::optional<Verdict> verdict;  // empty when verification did not run
  std::optional<double> cost;      // only for options that passed verification
  std::vector<std::pair<std::string, double>> metrics;
  bool selected = false;

  NodeStatus status() const
  {
    if (selected) {
      return NodeStatus::selected;
    }
    if (verdict && !verdict->passed) {
      return NodeStatus::rejected;
    }
    if (!evaluated) {
      return NodeStatus::not_evaluated;
    }
    if (!applicable) {
      return NodeStatus::inapplicable;
    }
    return NodeStatus::passed;
  }
};

struct DecisionTrace
{
  std::size_t tick = 0;
  std::vector<TraceEntry> entries;  // pre-order
  bool fallback_engaged = false;
  std::size_t verification_calls = 0;

  const TraceEntry * find(const std::string & name) const
  {
    for (const auto & e : entries) {
      if (e.name == name) {
        return &e;
      }
    }
    return nullptr;
  }

  /// The selected leaf behavior, if any.
  const TraceEntry * selected_behavior() const
  {
    for (const auto & e : entries) {
      if (e.selected && !e.is_arbitrator) {
        return &e;
      }
    }
    return nullptr;
  }
};

class NoValidOption : public std::runtime_error
{
public:
  explicit NoValidOption(const std::string & what) : std::runtime_error(what) {}
};

template <typename Situation, typename Command>
class Arbitrator;

/// A behavior component. Arbitrators are behaviors too, which makes graphs nestable.
template <typename Situation, typename Command>
class Behavior
{
public:
  using Ptr = std::shared_ptr<const Behavior>;

  explicit Behavior(std::string name, bool last_resort = false)
  : name_(std::move(name)), last_resort_(last_resort)
  {
  }
  virtual ~Behavior() = default;

  const std::string & name() const { return name_; }
  bool is_last_resort() const { return last_resort_; }

  virtual bool check_invocation(const Situation &) const { return true; }
  virtual Command get_command(const Situation & situation) const = 0;

  virtual const Arbitrator<Situation, Command> * as_arbitrator() const { return nullptr; }

private:
  std::string name_;
  bool last_resort_;
};

template <typename Command>
struct Outcome
{
  std::optional<Command> command;
  std::vector<TraceEntry> entries;  // this node first, then its subtree
  bool fallback_engaged = false;
  std::size_t verification_calls = 0;
  bool verified = false;  // command already passed verification or stems from a last resort
};

template <typename Situation, typename Command>
class Arbitrator : public Behavior<Situation, Command>
{
public:
  using Base = Behavior<Situation, Command>;
  using ChildPtr = typename Base::Ptr;
  /// An empty verifier disables verification for this arbitrator.
  using Verifier = std::function<Verdict(const Command &, const Situation &)>;

  Arbitrator(std::string name, std::vector<ChildPtr> children, Verifier verifier)
  : Base(std::move(name)), children_(std::move(children)), verifier_(std::move(verifier))
  {
  }

  const std::vector<ChildPtr> & children() const { return children_; }
  bool has_verifier() const { return static_cast<bool>(verifier_); }

  virtual Outcome<Command> arbitrate(const Situation & situation, int depth = 0) const = 0;

  Command get_command(const Situation & situation) const override
  {
    auto out = arbitrate(situation);
    if (!out.command) {
      throw NoValidOption("arbitrator '" + this->name() + "' has no applicable option");
    }
    return std::move(*out.command);
  }

  const Arbitrator * as_arbitrator() const override { return this; }

protected:
  /// Asks one child for a verified option. Sub-arbitrators expand their subtree into the entries.
  Outcome<Command> evaluate_child(const ChildPtr & child, const Situation & situation, int depth) const
  {
    Outcome<Command> out;
    if (const auto * sub = child->as_arbitrator()) {
      out = sub->arbitrate(situation, depth);
      if (!out.command) {
        return out;
      }
    } else {
      TraceEntry entry;
      entry.name = child->name();
      entry.depth = depth;
      entry.last_resort = child->is_last_resort();
      entry.evaluated = true;
      entry.applicable = child->check_invocation(situation);
      out.entries.push_back(std::move(entry));
      if (!out.entries.front().applicable) {
        return out;
      }
      out.command = child->get_command(situation);
      out.verified = child->is_last_resort();
    }
    if (!out.verified && verifier_) {
      auto verdict = verifier_(*out.command, situation);
      ++out.verification_calls;
      const bool passed = verdict.passed;
      out.entries.front().verdict = std::move(verdict);
      if (!passed) {
        out.command.reset();
        return out;
      }
      out.verified = true;
    }
    return out;
  }

  static TraceEntry not_evaluated_entry(const ChildPtr & child, int depth)
  {
    TraceEntry entry;
    entry.name = child->name();
    entry.depth = depth;
    entry.is_arbitrator = child->as_arbitrator() != nullptr;
    entry.last_resort = child->is_last_resort();
    return entry;
  }

  TraceEntry own_entry(int depth) const
  {
    TraceEntry entry;
    entry.name = this->name();
    entry.depth = depth;
    entry.is_arbitrator = true;
    entry.evaluated = true;
    return entry;
  }

private:
  std::vector<ChildPtr> children_;
  Verifier verifier_;
};

/// Selects the verified option with minimal cost. Exact ties go to the earliest child.
template <typename Situation, typename Command>
class CostArbitrator : public Arbitrator<Situation, Command>
{
public:
  using Base = Arbitrator<Situation, Command>;
  using CostFunction = std::function<CostEvaluation(const Command &, const Situation &)>;

  CostArbitrator(
    std::string name, std::vector<typename Base::ChildPtr> children, typename Base::Verifier verifier,
    CostFunction cost_function)
  : Base(std::move(name), std::move(children), std::move(verifier)),
    cost_function_(std::move(cost_function))
  {
    if (!cost_function_) {
      throw std::invalid_argument("cost arbitrator needs a cost function");
    }
  }

  Outcome<Command> arbitrate(const Situation & situation, int depth = 0) const override
  {
    Outcome<Command> result;
    result.entries.push_back(this->own_entry(depth));

    struct Candidate
    {
      Outcome<Command> outcome;
      std::size_t entry_offset = 0;
      double cost = 0.0;
    };
    std::optional<Candidate> best;
    std::vector<std::pair<std::size_t, std::size_t>> ranges;

    for (const auto & child : this->children()) {
      auto out = this->evaluate_child(child, situation, depth + 1);
      result.verification_calls += out.verification_calls;
      const std::size_t offset = result.entries.size();
      if (out.command) {
        auto evaluation = cost_function_(*out.command, situation);
        out.entries.front().cost = evaluation.cost;
        out.entries.front().metrics = std::move(evaluation.metrics);
        if (!best || evaluation.cost < best->cost) {
          auto & c = best.emplace();
          c.entry_offset = offset;
          c.cost = evaluation.cost;
          c.outcome.command = std::move(out.command);
          c.outcome.fallback_engaged = out.fallback_engaged;
          c.outcome.verified = out.verified;
        }
      }
      ranges.emplace_back(offset, out.entries.size());
      result.entries.insert(
        result.entries.end(), std::make_move_iterator(out.entries.begin()),
        std::make_move_iterator(out.entries.end()));
    }

    if (!best) {
      result.entries.front().applicable = false;
      return result;
    }
    result.entries.front().applicable = true;
    result.entries.front().cost = best->cost;
    // losing sub-arbitrators keep no selected path
    for (const auto & [offset, length] : ranges) {
      if (offset != best->entry_offset) {
        for (std::size_t k = offset; k < offset + length; ++k) {
          result.entries[k].selected = false;
        }
      }
    }
    result.entries[best->entry_offset].selected = true;
    result.command = std::move(best->outcome.command);
    result.fallback_engaged = best->outcome.fallback_engaged;
    result.verified = best->outcome.verified;
    return result;
  }

private:
  CostFunction cost_function_;
};

/// Selects the first verified option in child order. Children after the selected one are not
/// evaluated at all.
template <typename Situation, typename Command>
class PriorityArbitrator : public Arbitrator<Situation, Command>
{
public:
  using Base = Arbitrator<Situation, Command>;

  PriorityArbitrator(
    std::string name, std::vector<typename Base::ChildPtr> children, typename Base::Verifier verifier)
  : Base(std::move(name), std::move(children), std::move(verifier))
  {
  }

  Outcome<Command> arbitrate(const Situation & situation, int depth = 0) const override
  {
    Outcome<Command> result;
    result.entries.push_back(this->own_entry(depth));
    const auto & children = this->children();
    std::size_t i = 0;
    for (; i < children.size(); ++i) {
      auto out = this->evaluate_child(children[i], situation, depth + 1);
      result.verification_calls += out.verification_calls;
      const bool chosen = out.command.has_value();
      if (chosen) {
        out.entries.front().selected = true;
        result.command = std::move(out.command);
        result.fallback_engaged = out.fallback_engaged || children[i]->is_last_resort();
        result.verified = out.verified;
      }
      result.entries.insert(
        result.entries.end(), std::make_move_iterator(out.entries.begin()),
        std::make_move_iterator(out.entries.end()));
      if (chosen) {
        ++i;
        break;
      }
    }
    for (; i < children.size(); ++i) {
      result.entries.push_back(Base::not_evaluated_entry(children[i], depth + 1));
    }
    result.entries.front().applicable = result.command.has_value();
    return result;
  }
};

template <typename Command>
struct GraphResult
{
  Command command;
  DecisionTrace trace;
};

/// Runs the root arbitrator for one tick.
template <typename Situation, typename Command>
GraphResult<Command> run_graph(
  const Arbitrator<Situation, Command> & root, const Situation & situation, std::size_t tick = 0)
{
  auto out = root.arbitrate(situation, 0);
  if (!out.command) {
    throw NoValidOption("no valid option in graph '" + root.name() + "'; is a last-resort behavior missing?");
  }
  out.entries.front().selected = true;
  DecisionTrace trace;
  trace.tick = tick;
  trace.entries = std::move(out.entries);
  trace.fallback_engaged = out.fallback_engaged;
  trace.verification_calls = out.verification_calls;
  return {std::move(*out.command), std::move(trace)};
}

inline const char * status_glyph(NodeStatus status)
{
  switch (status) {
    case NodeStatus::selected:
      return "✓";
    case NodeStatus::rejected:
      return "✗";
    case NodeStatus::inapplicable:
      return "−";
    case NodeStatus::not_evaluated:
    case NodeStatus::passed:
      break;
  }
  return "·";
}

inline std::string format_cost(double cost)
{
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", cost);
  return buf;
}

/// One line per node, indented two spaces per depth:
///   <glyph> <name> [cost=<value>|rejected: <reason>|inapplicable]
/// followed by a fallback marker line when the last resort was engaged.
inline std::string render_trace(const DecisionTrace & trace)
{
  std::ostringstream os;
  os << "tick " << trace.tick << '\n';
  for (const auto & e : trace.entries) {
    os << std::string(static_cast<std::size_t>(2 * e.depth), ' ') << status_glyph(e.status()) << ' '
       << e.name;
    if (e.verdict && !e.verdict->passed) {
      os << " [rejected: " << e.verdict->reason << ']';
    } else if (e.evaluated && !e.applicable) {
      os << " [inapplicable]";
    } else if (e.cost) {
      os << " [cost=" << format_cost(*e.cost) << ']';
    }
    os << '\n';
  }
  if (trace.fallback_engaged) {
    const auto * sel = trace.selected_behavior();
    os << "!! fallback engaged: " << (sel != nullptr ? sel->name : std::string("?")) << '\n';
  }
  return os.str();
}

}  // namespace agplan::arbitration

#endif  // AGPLAN__ARBITRATION_HPP_
