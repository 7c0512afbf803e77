#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "wsp/core.hpp"
#include "wsp/detail/parallel.hpp"
#include "wsp/errors.hpp"
#include "wsp/options.hpp"
#include "wsp/solve.hpp"

namespace wsp {

// ---------------------------------------------------------------------------
// Ordered WSP: constraint satisfaction that is sensitive to the execution
// schedule (a linear extension of the step order). A Type 1 constraint
// (rho, s, s') binds only when s is performed before s'.
// ---------------------------------------------------------------------------

using ExecutionSchedule = std::vector<StepId>;

/// Streams every linear extension of the DAG in lexicographic order (by the
/// step id order), without materializing the whole family.
class LinearExtensionStream {
 public:
  explicit LinearExtensionStream(const StepDag& dag)
      : steps_(dag.steps()), indeg_(steps_.size(), 0), used_(steps_.size(), false) {
    succ_.resize(steps_.size());
    auto position = [&](StepId s) {
      return static_cast<std::size_t>(
          std::lower_bound(steps_.begin(), steps_.end(), s) - steps_.begin());
    };
    for (auto [a, b] : dag.edges()) {
      succ_[position(a)].push_back(position(b));
      ++indeg_[position(b)];
    }
  }

  std::optional<ExecutionSchedule> next() {
    if (done_) return std::nullopt;
    if (!started_) {
      started_ = true;
      if (!fill_from(0)) {
        done_ = true;
        return steps_.empty() ? std::optional<ExecutionSchedule>({})
                              : std::nullopt;
      }
      if (steps_.empty()) done_ = true;  // single empty schedule
      return snapshot();
    }
    // Backtrack: redo the deepest level that still has a larger candidate.
    while (!chosen_.empty()) {
      std::size_t depth = chosen_.size() - 1;
      std::size_t previous = pop();
      if (auto candidate = next_candidate(previous)) {
        push(*candidate);
        if (fill_from(depth + 1)) return snapshot();
        // fill_from cannot fail on a DAG, but stay defensive
        while (chosen_.size() > depth) pop();
      }
    }
    done_ = true;
    return std::nullopt;
  }

 private:
  std::optional<std::size_t> next_candidate(std::size_t after) const {
    for (std::size_t p = after + 1; p < steps_.size(); ++p)
      if (!used_[p] && indeg_[p] == 0) return p;
    return std::nullopt;
  }

  void push(std::size_t p) {
    used_[p] = true;
    for (std::size_t q : succ_[p]) --indeg_[q];
    chosen_.push_back(p);
  }

  std::size_t pop() {
    std::size_t p = chosen_.back();
    chosen_.pop_back();
    for (std::size_t q : succ_[p]) ++indeg_[q];
    used_[p] = false;
    return p;
  }

  bool fill_from(std::size_t depth) {
    for (std::size_t d = depth; d < steps_.size(); ++d) {
      auto candidate = next_candidate(static_cast<std::size_t>(-1));
      if (!candidate) return false;
      push(*candidate);
    }
    return true;
  }

  ExecutionSchedule snapshot() const {
    ExecutionSchedule out;
    out.reserve(chosen_.size());
    for (std::size_t p : chosen_) out.push_back(steps_[p]);
    return out;
  }

  std::vector<StepId> steps_;
  std::vector<std::vector<std::size_t>> succ_;
  std::vector<std::size_t> indeg_;
  std::vector<bool> used_;
  std::vector<std::size_t> chosen_;
  bool started_ = false;
  bool done_ = false;
};

/// Materialize all linear extensions, guarded by the cap.
inline std::vector<ExecutionSchedule> linear_extensions(const StepDag& dag,
                                                        const Caps& caps = {}) {
  LinearExtensionStream stream(dag);
  std::vector<ExecutionSchedule> out;
  while (auto schedule = stream.next()) {
    if (out.size() >= caps.max_linear_extensions)
      throw ResourceLimitError(
          "linear-extension count exceeds the cap of " +
          std::to_string(caps.max_linear_extensions));
    out.push_back(std::move(*schedule));
  }
  return out;
}

/// Order-sensitive satisfaction: (rho, s, s') holds for (schedule, plan)
/// when s precedes s' and (plan(s), plan(s')) is in rho, or when s' precedes
/// s (the constraint is then vacuous).
inline bool satisfies_ordered(const ExecutionSchedule& schedule,
                              const Plan& plan, const Constraint& c) {
  if (!c.is_type1())
    throw ContractViolation("ordered satisfaction is defined for Type 1 only");
  auto position = [&](StepId s) {
    auto it = std::find(schedule.begin(), schedule.end(), s);
    if (it == schedule.end())
      throw ContractViolation("constraint step outside the schedule");
    return static_cast<std::size_t>(it - schedule.begin());
  };
  const std::size_t p1 = position(c.s1());
  const std::size_t p2 = position(c.s2());
  if (p2 < p1) return true;
  if (p1 < p2) return c.relation().contains(plan.at(c.s1()), plan.at(c.s2()));
  return false;  // a step cannot precede itself
}

// ---------------------------------------------------------------------------
// Well-formed workflows: every constraint on an incomparable pair appears
// together with its transpose on the reversed pair.
// ---------------------------------------------------------------------------

struct WellFormedness {
  bool well_formed = true;
  std::optional<Constraint> offending;  // constraint found without a twin
  std::optional<Constraint> missing;    // the twin that would be required
};

inline WellFormedness is_well_formed(const WorkflowSchema& schema) {
  for (const Constraint& c : schema.constraints())
    if (!c.is_type1())
      throw ContractViolation("well-formedness is defined for Type 1 only");

  for (const Constraint& c : schema.constraints()) {
    if (!schema.dag().incomparable(c.s1(), c.s2())) continue;
    Constraint twin(c.relation().transposed(), {c.s2()}, {c.s1()});
    const auto& all = schema.constraints();
    if (std::find(all.begin(), all.end(), twin) == all.end())
      return WellFormedness{false, c, std::move(twin)};
  }
  return {};
}

// ---------------------------------------------------------------------------
// Solving OWSP. Each linear extension discards the constraints whose step
// pair it reverses (they hold vacuously), leaving a plain WSP instance.
// Exists: some extension's residual instance is satisfiable. All: every
// extension's residual instance is.
// ---------------------------------------------------------------------------

enum class OwspMode { Exists, All };

struct OwspResult {
  bool satisfiable = false;
  /// Witness schedule (Exists) or counterexample schedule (All, when not
  /// satisfiable).
  std::optional<ExecutionSchedule> schedule;
  std::optional<Plan> witness;
  std::uint64_t schedules_examined = 0;
  SolveStats stats;
};

namespace detail {

inline std::vector<Constraint> residual_constraints(
    const WorkflowSchema& schema, const ExecutionSchedule& schedule) {
  std::vector<std::size_t> rank(schema.step_names().size(), 0);
  for (std::size_t i = 0; i < schedule.size(); ++i)
    rank[schedule[i].value] = i;
  std::vector<Constraint> kept;
  for (const Constraint& c : schema.constraints())
    if (rank[c.s1().value] < rank[c.s2().value]) kept.push_back(c);
  return kept;
}

}  // namespace detail

inline OwspResult solve_owsp(const WorkflowSchema& schema, OwspMode mode,
                             const Caps& caps = {}) {
  detail::Stopwatch timer;
  for (const Constraint& c : schema.constraints()) {
    if (!c.is_type1())
      throw ContractViolation("ordered WSP is defined for Type 1 only");
    if (schema.dag().lt(c.s2(), c.s1()))
      throw ContractViolation(
          "constraint (rho, s, s') with s > s' can never apply");
    if (c.s1() == c.s2())
      throw ContractViolation(
          "constraint (rho, s, s) can never apply: a step does not precede "
          "itself");
  }

  OwspResult out;
  std::atomic<std::uint64_t> plans{0};
  std::atomic<std::uint64_t> exprs{0};
  auto examine = [&](const ExecutionSchedule& schedule)
      -> std::optional<std::pair<ExecutionSchedule, std::optional<Plan>>> {
    SolveResult solved = solve_auto(
        schema.with_constraints(detail::residual_constraints(schema, schedule)),
        caps);
    plans.fetch_add(solved.stats.plans_examined, std::memory_order_relaxed);
    exprs.fetch_add(solved.stats.simple_expressions_examined,
                    std::memory_order_relaxed);
    const bool hit =
        mode == OwspMode::Exists ? solved.sat() : !solved.sat();
    if (!hit) return std::nullopt;
    return std::make_pair(schedule, std::move(solved.witness));
  };

  std::optional<std::pair<ExecutionSchedule, std::optional<Plan>>> hit;
  if (caps.threads > 1) {
    const auto all = linear_extensions(schema.dag(), caps);
    out.schedules_examined = all.size();
    hit = detail::first_hit<std::pair<ExecutionSchedule, std::optional<Plan>>>(
        all.size(), caps.threads,
        [&](std::uint64_t i) { return examine(all[i]); });
  } else {
    LinearExtensionStream stream(schema.dag());
    while (auto schedule = stream.next()) {
      if (++out.schedules_examined > caps.max_linear_extensions)
        throw ResourceLimitError(
            "linear-extension count exceeds the cap of " +
            std::to_string(caps.max_linear_extensions));
      if ((hit = examine(*schedule))) break;
    }
  }

  if (mode == OwspMode::Exists) {
    if (hit) {
      out.satisfiable = true;
      out.schedule = std::move(hit->first);
      out.witness = std::move(hit->second);
    }
  } else {
    out.satisfiable = !hit;
    if (hit) out.schedule = std::move(hit->first);  // never-completable order
  }
  out.stats.plans_examined = plans.load();
  out.stats.simple_expressions_examined = exprs.load();
  out.stats.wall_seconds = timer.seconds();
  return out;
}

}  // namespace wsp
