#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "wsp/core.hpp"
#include "wsp/detail/parallel.hpp"
#include "wsp/errors.hpp"
#include "wsp/expr.hpp"
#include "wsp/options.hpp"
#include "wsp/solve.hpp"

namespace wsp {

// ---------------------------------------------------------------------------
// Violation analysis: can an authorized plan violate a constraint? A
// constraint (rho, S1, S2) is violated exactly when the complemented
// relation holds across the whole scope product, so each constraint turns
// into a conjunction of Type 1 constraints and the question becomes a
// disjunction of plain WSP instances. Workflows on which the answer is "no"
// need no reference monitor.
// ---------------------------------------------------------------------------

/// Expression satisfied by exactly the plans violating `c`. For Explicit
/// relations the complement is materialized over U x U (quadratic in the
/// user count).
inline ConstraintExpr violation_expression(const Constraint& c,
                                           std::uint32_t user_count) {
  UserRelation complement = c.relation().complemented(user_count);
  std::vector<ConstraintExpr> conjuncts;
  conjuncts.reserve(c.scope1().size() * c.scope2().size());
  for (StepId a : c.scope1())
    for (StepId b : c.scope2())
      conjuncts.push_back(ConstraintExpr::primitive(complement, a, b));
  if (conjuncts.size() == 1) return std::move(conjuncts.front());
  return ConstraintExpr::conjunction(std::move(conjuncts));
}

namespace detail {

/// The WSP instance whose valid plans are the authorized plans violating
/// constraint `index` of the schema.
inline WorkflowSchema violation_instance(const WorkflowSchema& schema,
                                         std::size_t index) {
  const Constraint& c = schema.constraints()[index];
  UserRelation complement = c.relation().complemented(schema.user_count());
  std::vector<Constraint> conjunction;
  conjunction.reserve(c.scope1().size() * c.scope2().size());
  for (StepId a : c.scope1())
    for (StepId b : c.scope2())
      conjunction.push_back(Constraint(complement, {a}, {b}));
  return schema.with_constraints(std::move(conjunction));
}

}  // namespace detail

struct ViolationFinding {
  SolveResult result;
  /// Index of the violated constraint when a violating plan exists. The
  /// witness in `result` is authorized for the schema and violates exactly
  /// this constraint (it need not satisfy the others).
  std::optional<std::size_t> violated_constraint;
};

/// Does some authorized plan violate at least one constraint? Disjuncts are
/// tried in constraint-list order; with threads > 1 they run concurrently
/// and any hit wins.
inline ViolationFinding find_violating_plan(const WorkflowSchema& schema,
                                            const Caps& caps = {}) {
  detail::Stopwatch timer;
  ViolationFinding out;

  std::atomic<std::uint64_t> plans{0};
  std::atomic<std::uint64_t> exprs{0};
  auto worker = [&](std::uint64_t index)
      -> std::optional<std::pair<std::size_t, SolveResult>> {
    SolveResult solved =
        solve_auto(detail::violation_instance(schema, index), caps);
    plans.fetch_add(solved.stats.plans_examined, std::memory_order_relaxed);
    exprs.fetch_add(solved.stats.simple_expressions_examined,
                    std::memory_order_relaxed);
    if (!solved.sat()) return std::nullopt;
    return std::make_pair(static_cast<std::size_t>(index), std::move(solved));
  };

  auto hit = detail::first_hit<std::pair<std::size_t, SolveResult>>(
      schema.constraints().size(), caps.threads, worker);

  if (hit) {
    out.result.status = SolveStatus::Sat;
    out.result.witness = std::move(hit->second.witness);
    out.violated_constraint = hit->first;
  }
  out.result.stats.plans_examined = plans.load();
  out.result.stats.simple_expressions_examined = exprs.load();
  out.result.stats.wall_seconds = timer.seconds();
  return out;
}

/// Per-constraint verdicts: true when some authorized plan violates the
/// constraint.
inline std::vector<bool> violable_constraints(const WorkflowSchema& schema,
                                              const Caps& caps = {}) {
  std::vector<bool> out(schema.constraints().size(), false);
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = solve_auto(detail::violation_instance(schema, i), caps).sat();
  return out;
}

struct PruneResult {
  WorkflowSchema pruned;
  std::vector<std::size_t> removed_indices;
  std::vector<Constraint> removed;
};

/// Drop every constraint no authorized plan can violate. Such constraints
/// hold under every authorized plan, so the pruned schema is satisfiable
/// exactly when the original is.
inline PruneResult prune_constraints(const WorkflowSchema& schema,
                                     const Caps& caps = {}) {
  const std::vector<bool> violable = violable_constraints(schema, caps);
  std::vector<Constraint> kept;
  std::vector<std::size_t> removed_indices;
  std::vector<Constraint> removed;
  for (std::size_t i = 0; i < violable.size(); ++i) {
    if (violable[i])
      kept.push_back(schema.constraints()[i]);
    else {
      removed_indices.push_back(i);
      removed.push_back(schema.constraints()[i]);
    }
  }
  return PruneResult{schema.with_constraints(std::move(kept)),
                     std::move(removed_indices), std::move(removed)};
}

}  // namespace wsp
