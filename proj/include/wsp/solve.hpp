#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "wsp/core.hpp"
#include "wsp/detail/parallel.hpp"
#include "wsp/detail/set_partitions.hpp"
#include "wsp/errors.hpp"
#include "wsp/expr.hpp"
#include "wsp/options.hpp"
#include "wsp/reduce.hpp"

namespace wsp {

enum class SolveStatus { Sat, Unsat };

struct SolveStats {
  std::uint64_t plans_examined = 0;
  std::uint64_t simple_expressions_examined = 0;
  std::uint64_t partitions_examined = 0;
  double wall_seconds = 0.0;
};

/// Outcome of a decision procedure. A Sat result always carries a witness
/// plan that is valid for the schema that was solved.
struct SolveResult {
  SolveStatus status = SolveStatus::Unsat;
  std::optional<Plan> witness;
  SolveStats stats;

  bool sat() const noexcept { return status == SolveStatus::Sat; }
};

namespace detail {

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

/// Constraint scopes resolved to positions in the schema's sorted step list,
/// so the enumeration loops run without id lookups.
struct IndexedConstraint {
  const UserRelation* relation;
  std::vector<std::size_t> scope1;
  std::vector<std::size_t> scope2;
};

inline std::vector<IndexedConstraint> index_constraints(
    const WorkflowSchema& schema) {
  const auto& steps = schema.steps();
  auto position = [&](StepId s) {
    return static_cast<std::size_t>(
        std::lower_bound(steps.begin(), steps.end(), s) - steps.begin());
  };
  std::vector<IndexedConstraint> out;
  out.reserve(schema.constraints().size());
  for (const Constraint& c : schema.constraints()) {
    IndexedConstraint ic;
    ic.relation = &c.relation();
    for (StepId s : c.scope1()) ic.scope1.push_back(position(s));
    for (StepId s : c.scope2()) ic.scope2.push_back(position(s));
    out.push_back(std::move(ic));
  }
  return out;
}

inline bool assignment_satisfies(const std::vector<UserId>& assignment,
                                 const IndexedConstraint& c) {
  for (std::size_t a : c.scope1)
    for (std::size_t b : c.scope2)
      if (c.relation->contains(assignment[a], assignment[b])) return true;
  return false;
}

inline Plan make_plan(const std::vector<StepId>& steps,
                      const std::vector<UserId>& assignment) {
  std::vector<std::pair<StepId, UserId>> entries;
  entries.reserve(steps.size());
  for (std::size_t i = 0; i < steps.size(); ++i)
    entries.emplace_back(steps[i], assignment[i]);
  return Plan(std::move(entries));
}

/// Lexicographic product enumeration over per-step candidate lists; calls
/// `accept` on each assignment and stops on the first accepted one.
/// Every enumerated assignment counts toward the plan cap.
template <typename Accept>
std::optional<std::vector<UserId>> enumerate_assignments(
    const std::vector<std::vector<UserId>>& candidates,
    std::atomic<std::uint64_t>& plans_counter, std::uint64_t max_plans,
    const Accept& accept) {
  const std::size_t k = candidates.size();
  for (const auto& list : candidates)
    if (list.empty()) return std::nullopt;

  std::vector<std::size_t> digits(k, 0);
  std::vector<UserId> assignment(k);
  for (std::size_t i = 0; i < k; ++i) assignment[i] = candidates[i][0];

  while (true) {
    if (plans_counter.fetch_add(1, std::memory_order_relaxed) >= max_plans)
      throw ResourceLimitError("plan enumeration exceeds the cap of " +
                               std::to_string(max_plans));
    if (accept(assignment)) return assignment;

    std::size_t i = k;
    while (i-- > 0) {
      if (++digits[i] < candidates[i].size()) {
        assignment[i] = candidates[i][digits[i]];
        break;
      }
      digits[i] = 0;
      assignment[i] = candidates[i][0];
    }
    if (i == static_cast<std::size_t>(-1)) return std::nullopt;
  }
}

inline std::uint64_t saturating_pow(std::uint64_t base, std::size_t exp) {
  std::uint64_t out = 1;
  for (std::size_t i = 0; i < exp; ++i) {
    if (base != 0 && out > UINT64_MAX / base) return UINT64_MAX;
    out *= base;
  }
  return out;
}

}  // namespace detail

/// True when every constraint relation is = or !=.
inline bool uses_only_eq_ne(const WorkflowSchema& schema) {
  for (const Constraint& c : schema.constraints())
    if (c.relation().kind() == UserRelation::Kind::Explicit) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Naive oracle: every one of the n^k plans, in lexicographic order (steps in
// id order, users in id order). The reference point for all property tests.
// ---------------------------------------------------------------------------

inline SolveResult solve_naive(const WorkflowSchema& schema,
                               const Caps& caps = {}) {
  detail::Stopwatch timer;
  const auto& steps = schema.steps();
  const std::uint64_t total =
      detail::saturating_pow(schema.user_count(), steps.size());
  if (total > caps.max_plans) {
    std::string shown = total == UINT64_MAX ? std::string("more than 2^64 - 1")
                                            : std::to_string(total);
    throw ResourceLimitError("naive search over " + shown +
                             " plans exceeds the cap of " +
                             std::to_string(caps.max_plans));
  }

  const auto indexed = detail::index_constraints(schema);
  std::vector<std::vector<UserId>> candidates(steps.size(), schema.users());
  std::atomic<std::uint64_t> counter{0};

  auto authorized = [&](const std::vector<UserId>& assignment) {
    for (std::size_t i = 0; i < steps.size(); ++i)
      if (!schema.authorizes(steps[i], assignment[i])) return false;
    return true;
  };

  auto hit = detail::enumerate_assignments(
      candidates, counter, caps.max_plans,
      [&](const std::vector<UserId>& assignment) {
        if (!authorized(assignment)) return false;
        for (const auto& c : indexed)
          if (!detail::assignment_satisfies(assignment, c)) return false;
        return true;
      });

  SolveResult result;
  result.stats.plans_examined = counter.load();
  if (hit) {
    result.status = SolveStatus::Sat;
    result.witness = detail::make_plan(steps, *hit);
  }
  result.stats.wall_seconds = timer.seconds();
  return result;
}

// ---------------------------------------------------------------------------
// The constraint-expression pipeline for WSP(=, !=) with constraints of
// Types 1-3: rewrite the constraint set in CNF, walk the simple constraint
// expressions (one literal per clause), and decide each induced WSP1(=, !=)
// instance by constraint reduction, rich-step pruning and a brute-force
// search over the remaining core.
// ---------------------------------------------------------------------------

namespace detail {

/// Assign free (>= k authorized users) supersteps after the core plan:
/// id order, least authorized user distinct from every user assigned so far.
/// A fresh user always exists because the step has at least as many choices
/// as there are supersteps in total.
inline void assign_free_steps(const MergedSchema& merged,
                              const std::vector<StepId>& free_steps,
                              std::vector<std::pair<StepId, UserId>>& assigned) {
  std::vector<bool> used(merged.schema.user_count(), false);
  for (auto [s, u] : assigned) {
    (void)s;
    used[u.value] = true;
  }
  for (StepId s : free_steps) {
    const auto& candidates = merged.schema.authorized(s);
    const UserId* pick = nullptr;
    for (const UserId& u : candidates) {
      if (!used[u.value]) {
        pick = &u;
        break;
      }
    }
    if (!pick) throw Error("internal: free superstep has no fresh user");
    used[pick->value] = true;
    assigned.emplace_back(s, *pick);
  }
}

/// Decide one simple expression's WSP1(=, !=) instance. Returns the witness
/// lifted back to the original steps, or nullopt.
inline std::optional<Plan> solve_simple_instance(
    const WorkflowSchema& schema, const SimpleExpression& simple,
    std::atomic<std::uint64_t>& plans_counter, const Caps& caps) {
  std::vector<Constraint> type1;
  type1.reserve(simple.literals.size());
  for (const PrimitiveConstraint& lit : simple.literals)
    type1.push_back(Constraint(lit.relation, {lit.s1}, {lit.s2}));

  auto merged = reduce_eq(schema.with_constraints(std::move(type1)));
  if (!merged) return std::nullopt;

  PrunedCore pruned = prune_rich_steps(*merged);
  const auto& core = pruned.core.schema;
  const auto& core_steps = core.steps();

  std::vector<std::vector<UserId>> candidates;
  candidates.reserve(core_steps.size());
  for (StepId s : core_steps) candidates.push_back(core.authorized(s));
  const auto indexed = index_constraints(core);

  auto hit = enumerate_assignments(
      candidates, plans_counter, caps.max_plans,
      [&](const std::vector<UserId>& assignment) {
        for (const auto& c : indexed)
          if (!assignment_satisfies(assignment, c)) return false;
        return true;
      });
  if (!hit) return std::nullopt;

  std::vector<std::pair<StepId, UserId>> superstep_assignment;
  superstep_assignment.reserve(merged->schema.steps().size());
  for (std::size_t i = 0; i < core_steps.size(); ++i)
    superstep_assignment.emplace_back(core_steps[i], (*hit)[i]);
  assign_free_steps(*merged, pruned.free_steps, superstep_assignment);

  return merged->lift(Plan(std::move(superstep_assignment)));
}

}  // namespace detail

inline SolveResult solve_fpt(const WorkflowSchema& schema,
                             const Caps& caps = {}) {
  detail::Stopwatch timer;
  if (!uses_only_eq_ne(schema))
    throw UnsupportedRelationError("solve_fpt supports only = and != relations");

  const CnfExpression cnf = to_cnf(schema.constraints());
  const std::uint64_t count = cnf.simple_count();
  if (count > caps.max_simple_expressions) {
    std::string shown = count == UINT64_MAX ? std::string("more than 2^64 - 1")
                                            : std::to_string(count);
    throw ResourceLimitError("simple-expression count " + shown +
                             " exceeds the cap of " +
                             std::to_string(caps.max_simple_expressions));
  }

  std::atomic<std::uint64_t> plans_counter{0};
  std::atomic<std::uint64_t> expressions_counter{0};

  auto worker = [&](std::uint64_t index) -> std::optional<Plan> {
    expressions_counter.fetch_add(1, std::memory_order_relaxed);
    return detail::solve_simple_instance(
        schema, simple_expression_at(cnf, index), plans_counter, caps);
  };

  std::optional<Plan> witness =
      detail::first_hit<Plan>(count, caps.threads, worker);

  SolveResult result;
  result.stats.plans_examined = plans_counter.load();
  result.stats.simple_expressions_examined = expressions_counter.load();
  if (witness) {
    if (!is_valid(schema, *witness))
      throw Error("internal: pipeline produced an invalid witness");
    result.status = SolveStatus::Sat;
    result.witness = std::move(witness);
  }
  result.stats.wall_seconds = timer.seconds();
  return result;
}

/// solve_fpt when every relation is = or !=, the naive search otherwise.
inline SolveResult solve_auto(const WorkflowSchema& schema,
                              const Caps& caps = {}) {
  return uses_only_eq_ne(schema) ? solve_fpt(schema, caps)
                                 : solve_naive(schema, caps);
}

// ---------------------------------------------------------------------------
// Negative constraint expressions: leaves are (=, s1, s2) primitives under
// arbitrary and/or/not structure. Each set partition of the steps fixes a
// truth value for every (=) literal (co-block membership); a partition
// whose template satisfies the expression induces a blocks instance solved
// with pairwise-distinct users. Witnesses are re-checked against the
// expression before they are accepted.
//
// The expression stands in for the constraint set: a Sat witness is
// authorized and satisfies `expr`; the schema's own constraint list is not
// consulted.
// ---------------------------------------------------------------------------

inline SolveResult solve_negative(const WorkflowSchema& schema,
                                  const ConstraintExpr& expr,
                                  const Caps& caps = {}) {
  detail::Stopwatch timer;

  // Validate the equality-form precondition up front.
  {
    std::vector<const ConstraintExpr*> stack{&expr};
    while (!stack.empty()) {
      const ConstraintExpr* e = stack.back();
      stack.pop_back();
      if (e->kind() == ConstraintExpr::Kind::Primitive) {
        const PrimitiveConstraint& p = e->literal();
        if (p.relation.kind() != UserRelation::Kind::Diagonal)
          throw ContractViolation(
              "solve_negative expects (=) primitives, possibly negated");
        if (!schema.dag().contains(p.s1) || !schema.dag().contains(p.s2))
          throw ContractViolation("expression leaf outside the step set");
      } else {
        for (const auto& c : e->children()) stack.push_back(&c);
      }
    }
  }

  const auto& steps = schema.steps();
  const std::size_t k = steps.size();
  const std::uint64_t bell = detail::bell_number(k);
  if (bell > caps.max_partitions)
    throw ResourceLimitError(
        "set-partition count " + std::to_string(bell) +
        " exceeds the cap of " + std::to_string(caps.max_partitions));

  auto position = [&](StepId s) {
    return static_cast<std::size_t>(
        std::lower_bound(steps.begin(), steps.end(), s) - steps.begin());
  };

  SolveResult result;
  std::atomic<std::uint64_t> plans_counter{0};
  detail::RestrictedGrowthStrings partitions(k);

  do {
    ++result.stats.partitions_examined;
    const auto& digits = partitions.current();

    auto template_true = [&](const PrimitiveConstraint& p) {
      return digits[position(p.s1)] == digits[position(p.s2)];
    };
    if (!eval_with(expr, template_true)) continue;

    const std::uint32_t block_count = partitions.block_count();
    std::vector<std::vector<StepId>> block_members(block_count);
    for (std::size_t i = 0; i < k; ++i)
      block_members[digits[i]].push_back(steps[i]);

    // Authorized users per block: intersection over members.
    std::vector<std::vector<UserId>> block_auth(block_count);
    bool feasible = true;
    for (std::uint32_t b = 0; b < block_count && feasible; ++b) {
      std::vector<UserId> common = schema.authorized(block_members[b][0]);
      for (std::size_t m = 1; m < block_members[b].size() && !common.empty();
           ++m) {
        const auto& next = schema.authorized(block_members[b][m]);
        std::vector<UserId> tmp;
        std::set_intersection(common.begin(), common.end(), next.begin(),
                              next.end(), std::back_inserter(tmp));
        common = std::move(tmp);
      }
      if (common.empty()) feasible = false;
      block_auth[b] = std::move(common);
    }
    if (!feasible) continue;

    // Blocks take pairwise-distinct users (the conservative reading of the
    // partition template).
    auto hit = detail::enumerate_assignments(
        block_auth, plans_counter, caps.max_plans,
        [&](const std::vector<UserId>& assignment) {
          for (std::size_t a = 0; a < assignment.size(); ++a)
            for (std::size_t b = a + 1; b < assignment.size(); ++b)
              if (assignment[a] == assignment[b]) return false;
          return true;
        });
    if (!hit) continue;

    std::vector<std::pair<StepId, UserId>> entries;
    entries.reserve(k);
    for (std::uint32_t b = 0; b < block_count; ++b)
      for (StepId s : block_members[b]) entries.emplace_back(s, (*hit)[b]);
    Plan plan(std::move(entries));

    if (!is_authorized(schema, plan) || !eval(plan, expr)) continue;

    result.status = SolveStatus::Sat;
    result.witness = std::move(plan);
    break;
  } while (partitions.advance());

  result.stats.plans_examined = plans_counter.load();
  result.stats.wall_seconds = timer.seconds();
  return result;
}

// ---------------------------------------------------------------------------
// Minimum number of users: binary search over m in [1, k] with m users, each
// authorized for every step. At most ceil(log2 k) + 1 distinct solver calls.
// ---------------------------------------------------------------------------

inline std::optional<std::uint32_t> min_users(
    const SymbolTable& step_names, const StepDag& dag,
    const std::vector<Constraint>& constraints, const Caps& caps = {}) {
  for (const Constraint& c : constraints)
    if (c.relation().kind() == UserRelation::Kind::Explicit)
      throw ContractViolation(
          "min_users requires user-agnostic (= / !=) constraints");

  const std::uint32_t k = static_cast<std::uint32_t>(dag.size());
  if (k == 0) return 0;

  std::map<std::uint32_t, bool> memo;
  auto sat_with = [&](std::uint32_t m) {
    auto it = memo.find(m);
    if (it != memo.end()) return it->second;
    SymbolTable user_names;
    std::vector<std::pair<StepId, UserId>> auth;
    for (std::uint32_t u = 0; u < m; ++u)
      user_names.intern("u" + std::to_string(u + 1));
    for (StepId s : dag.steps())
      for (std::uint32_t u = 0; u < m; ++u) auth.emplace_back(s, UserId{u});
    WorkflowSchema schema(step_names, std::move(user_names), dag,
                          std::move(auth), constraints);
    bool sat = solve_fpt(schema, caps).sat();
    memo.emplace(m, sat);
    return sat;
  };

  std::uint32_t lo = 1, hi = k;
  while (lo < hi) {
    std::uint32_t mid = lo + (hi - lo) / 2;
    if (sat_with(mid))
      hi = mid;
    else
      lo = mid + 1;
  }
  if (!sat_with(lo)) return std::nullopt;
  return lo;
}

inline std::optional<std::uint32_t> min_users(const WorkflowSchema& schema,
                                              const Caps& caps = {}) {
  return min_users(schema.step_names(), schema.dag(), schema.constraints(),
                   caps);
}

// ---------------------------------------------------------------------------
// Runtime step-grant check: pin the performed steps and the requested
// assignment through the authorization relation, then decide the pinned
// instance. ALLOW exactly when some full valid plan extends the history
// plus the request.
// ---------------------------------------------------------------------------

enum class GrantDecision { Allow, Deny };

struct GrantResult {
  GrantDecision decision = GrantDecision::Deny;
  /// A full valid plan extending the history and the request, when allowed.
  std::optional<Plan> completion;
  SolveStats stats;

  bool allowed() const noexcept { return decision == GrantDecision::Allow; }
};

inline GrantResult check_step_grant(const WorkflowSchema& schema,
                                    const Plan& partial, StepId step,
                                    UserId user, const Caps& caps = {}) {
  if (!schema.dag().contains(step))
    throw ContractViolation("grant check names an unknown step");
  if (user.value >= schema.user_count())
    throw ContractViolation("grant check names an unknown user");
  if (partial.contains(step))
    throw ContractViolation("step has already been performed");
  if (!schema.authorizes(step, user))
    throw ContractViolation("user is not authorized for the requested step");
  for (auto [s, u] : partial.entries()) {
    if (!schema.dag().contains(s))
      throw ContractViolation("partial plan names an unknown step");
    if (!schema.authorizes(s, u))
      throw ContractViolation("partial plan is not authorized");
  }
  for (StepId s : schema.steps()) {
    if (schema.dag().lt(s, step) && !partial.contains(s))
      throw ContractViolation("step is not ready: predecessor '" +
                              schema.step_names().name(s.value) +
                              "' has not been performed");
  }

  std::vector<std::pair<StepId, UserId>> pinned_auth;
  for (StepId s : schema.steps()) {
    if (partial.contains(s)) {
      pinned_auth.emplace_back(s, partial.at(s));
    } else if (s == step) {
      pinned_auth.emplace_back(s, user);
    } else {
      for (UserId u : schema.authorized(s)) pinned_auth.emplace_back(s, u);
    }
  }

  SolveResult solved = solve_auto(schema.with_auth(std::move(pinned_auth)), caps);
  GrantResult out;
  out.stats = solved.stats;
  if (solved.sat()) {
    out.decision = GrantDecision::Allow;
    out.completion = std::move(solved.witness);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Worst-case constraint-count ceilings. The bounds are counting facts, not
// validity conditions, so exceeding them only produces a warning.
// ---------------------------------------------------------------------------

inline std::vector<std::string> constraint_count_warnings(
    const WorkflowSchema& schema) {
  const std::size_t k = schema.steps().size();
  std::uint64_t type2 = 0, type3 = 0;
  for (const Constraint& c : schema.constraints()) {
    if (c.type() == 2) ++type2;
    if (c.type() == 3) ++type3;
  }
  std::vector<std::string> warnings;
  const std::uint64_t type2_limit =
      k == 0 ? 0
             : (detail::saturating_pow(2, k - 1) == UINT64_MAX
                    ? UINT64_MAX
                    : k * detail::saturating_pow(2, k - 1));
  const std::uint64_t type3_limit = detail::saturating_pow(2, 2 * k);
  if (type2 > type2_limit)
    warnings.push_back("Type 2 constraint count " + std::to_string(type2) +
                       " exceeds the worst-case distinct-constraint ceiling " +
                       std::to_string(type2_limit));
  if (type3 > type3_limit)
    warnings.push_back("Type 3 constraint count " + std::to_string(type3) +
                       " exceeds the worst-case distinct-constraint ceiling " +
                       std::to_string(type3_limit));
  return warnings;
}

}  // namespace wsp
