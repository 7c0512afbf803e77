#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "wsp/core.hpp"
#include "wsp/detail/union_find.hpp"
#include "wsp/errors.hpp"

namespace wsp {

// ---------------------------------------------------------------------------
// The WSP1(=,!=) -> WSP1(!=) constraint reduction: steps connected by (=)
// constraints collapse into supersteps, (!=) constraints are re-pointed to
// the supersteps, and the instance is unsatisfiable outright when a (!=)
// constraint joins two steps of one block or a block's authorization
// intersection is empty.
// ---------------------------------------------------------------------------

struct MergedSchema {
  /// Superstep schema: only Type 1 (!=) constraints remain; the step graph
  /// carries no edges (plan validity does not consult the ordering).
  WorkflowSchema schema;
  /// Original step -> superstep, sorted by original step.
  std::vector<std::pair<StepId, StepId>> block_of;
  /// Superstep -> original members, sorted by superstep.
  std::vector<std::pair<StepId, std::vector<StepId>>> members;

  StepId superstep_of(StepId original) const {
    auto it = std::lower_bound(
        block_of.begin(), block_of.end(), original,
        [](const auto& e, StepId key) { return e.first < key; });
    if (it == block_of.end() || it->first != original)
      throw ContractViolation("superstep_of(): unknown original step");
    return it->second;
  }

  const std::vector<StepId>& members_of(StepId superstep) const {
    auto it = std::lower_bound(
        members.begin(), members.end(), superstep,
        [](const auto& e, StepId key) { return e.first < key; });
    if (it == members.end() || it->first != superstep)
      throw ContractViolation("members_of(): unknown superstep");
    return it->second;
  }

  /// Pull a superstep plan back to the original steps: every member gets its
  /// block's user.
  Plan lift(const Plan& merged_plan) const {
    std::vector<std::pair<StepId, UserId>> assignment;
    assignment.reserve(block_of.size());
    for (const auto& [superstep, member_list] : members) {
      UserId u = merged_plan.at(superstep);
      for (StepId original : member_list) assignment.emplace_back(original, u);
    }
    return Plan(std::move(assignment));
  }
};

/// Apply the constraint reduction. Returns nullopt when the instance is
/// already unsatisfiable (a (!=) constraint inside one block, or a block no
/// user can perform in full). Requires Type 1 constraints over {=, !=};
/// anything else is a contract violation.
inline std::optional<MergedSchema> reduce_eq(const WorkflowSchema& schema) {
  const auto& steps = schema.steps();
  const std::size_t k = steps.size();
  auto position = [&](StepId s) {
    return static_cast<std::size_t>(
        std::lower_bound(steps.begin(), steps.end(), s) - steps.begin());
  };

  for (const Constraint& c : schema.constraints()) {
    if (!c.is_type1())
      throw ContractViolation("reduce_eq requires Type 1 constraints");
    auto kind = c.relation().kind();
    if (kind != UserRelation::Kind::Diagonal &&
        kind != UserRelation::Kind::NotDiagonal)
      throw ContractViolation("reduce_eq requires = or != relations");
  }

  detail::UnionFind uf(k);
  for (const Constraint& c : schema.constraints()) {
    if (c.relation().kind() == UserRelation::Kind::Diagonal)
      uf.unite(position(c.s1()), position(c.s2()));
  }

  // Block ids in order of each block's smallest member.
  std::vector<std::size_t> root_of(k);
  std::map<std::size_t, std::uint32_t> block_index;
  for (std::size_t i = 0; i < k; ++i) {
    root_of[i] = uf.find(i);
    block_index.emplace(root_of[i], 0);
  }
  {
    std::uint32_t next = 0;
    std::vector<bool> seen(k, false);
    for (std::size_t i = 0; i < k; ++i) {
      if (!seen[root_of[i]]) {
        seen[root_of[i]] = true;
        block_index[root_of[i]] = next++;
      }
    }
  }
  const std::uint32_t block_count =
      static_cast<std::uint32_t>(block_index.size());

  std::vector<std::vector<StepId>> block_members(block_count);
  for (std::size_t i = 0; i < k; ++i)
    block_members[block_index[root_of[i]]].push_back(steps[i]);

  // Re-point (!=) constraints while checking the step (2) contradiction.
  std::vector<std::pair<std::uint32_t, std::uint32_t>> ne_pairs;
  for (const Constraint& c : schema.constraints()) {
    if (c.relation().kind() != UserRelation::Kind::NotDiagonal) continue;
    std::uint32_t a = block_index[root_of[position(c.s1())]];
    std::uint32_t b = block_index[root_of[position(c.s2())]];
    if (a == b) return std::nullopt;  // (=,...) chain meets (!=, s', s'')
    if (a > b) std::swap(a, b);
    ne_pairs.emplace_back(a, b);
  }
  std::sort(ne_pairs.begin(), ne_pairs.end());
  ne_pairs.erase(std::unique(ne_pairs.begin(), ne_pairs.end()),
                 ne_pairs.end());

  // Superstep names: block prefix + lexicographically smallest member name.
  SymbolTable superstep_names;
  std::vector<std::pair<StepId, UserId>> auth;
  for (std::uint32_t b = 0; b < block_count; ++b) {
    std::string smallest = schema.step_names().name(block_members[b][0].value);
    for (StepId s : block_members[b]) {
      const std::string& n = schema.step_names().name(s.value);
      if (n < smallest) smallest = n;
    }
    std::uint32_t id = superstep_names.intern("blk:" + smallest);
    if (id != b) throw Error("internal: superstep interning out of order");

    // Authorized for the block = authorized for every member.
    std::vector<UserId> common = schema.authorized(block_members[b][0]);
    for (std::size_t m = 1; m < block_members[b].size() && !common.empty();
         ++m) {
      const auto& next = schema.authorized(block_members[b][m]);
      std::vector<UserId> tmp;
      std::set_intersection(common.begin(), common.end(), next.begin(),
                            next.end(), std::back_inserter(tmp));
      common = std::move(tmp);
    }
    if (common.empty()) return std::nullopt;  // nobody can perform the block
    for (UserId u : common) auth.emplace_back(StepId{b}, u);
  }

  std::vector<StepId> superstep_ids;
  superstep_ids.reserve(block_count);
  for (std::uint32_t b = 0; b < block_count; ++b)
    superstep_ids.push_back(StepId{b});

  std::vector<Constraint> merged_constraints;
  merged_constraints.reserve(ne_pairs.size());
  for (auto [a, b] : ne_pairs) {
    merged_constraints.push_back(Constraint(UserRelation::not_diagonal(),
                                            {StepId{a}}, {StepId{b}}));
  }

  MergedSchema out{
      WorkflowSchema(std::move(superstep_names), schema.user_names(),
                     StepDag(std::move(superstep_ids), {}), std::move(auth),
                     std::move(merged_constraints)),
      {},
      {}};
  for (std::size_t i = 0; i < k; ++i)
    out.block_of.emplace_back(steps[i],
                              StepId{block_index[root_of[i]]});
  std::sort(out.block_of.begin(), out.block_of.end());
  for (std::uint32_t b = 0; b < block_count; ++b)
    out.members.emplace_back(StepId{b}, std::move(block_members[b]));
  return out;
}

// ---------------------------------------------------------------------------
// Rich-step pruning: in a WSP1(!=) instance with b supersteps, a superstep
// with at least b authorized users can always take a user fresh to the rest
// of the plan, so the search may focus on the remaining "core" steps.
// ---------------------------------------------------------------------------

struct PrunedCore {
  /// The merged schema restricted to core supersteps and the (!=)
  /// constraints between them.
  MergedSchema core;
  /// Supersteps with >= b authorized users, in id order.
  std::vector<StepId> free_steps;
  /// Retained (!=) constraints joining a core step and a free step; these are
  /// discharged by the greedy free-step assignment after the core solve.
  std::vector<Constraint> core_free_constraints;
};

inline PrunedCore prune_rich_steps(const MergedSchema& merged) {
  for (const Constraint& c : merged.schema.constraints()) {
    if (!c.is_type1() ||
        c.relation().kind() != UserRelation::Kind::NotDiagonal)
      throw ContractViolation("prune_rich_steps expects a WSP1(!=) instance");
  }

  const auto& steps = merged.schema.steps();
  const std::size_t threshold = steps.size();  // k = number of supersteps

  std::vector<StepId> core_steps;
  std::vector<StepId> free_steps;
  for (StepId s : steps) {
    if (merged.schema.authorized(s).size() >= threshold)
      free_steps.push_back(s);
    else
      core_steps.push_back(s);
  }

  auto is_free = [&](StepId s) {
    return std::binary_search(free_steps.begin(), free_steps.end(), s);
  };

  std::vector<Constraint> core_constraints;
  std::vector<Constraint> bridge_constraints;
  for (const Constraint& c : merged.schema.constraints()) {
    const bool f1 = is_free(c.s1());
    const bool f2 = is_free(c.s2());
    if (f1 && f2) continue;  // both sides get fresh users anyway
    if (f1 || f2)
      bridge_constraints.push_back(c);
    else
      core_constraints.push_back(c);
  }

  std::vector<std::pair<StepId, UserId>> core_auth;
  for (StepId s : core_steps)
    for (UserId u : merged.schema.authorized(s)) core_auth.emplace_back(s, u);

  MergedSchema core{
      WorkflowSchema(merged.schema.step_names(), merged.schema.user_names(),
                     StepDag(core_steps, {}), std::move(core_auth),
                     std::move(core_constraints)),
      {},
      {}};
  for (const auto& entry : merged.block_of)
    if (!is_free(entry.second)) core.block_of.push_back(entry);
  for (const auto& entry : merged.members)
    if (!is_free(entry.first)) core.members.push_back(entry);

  return PrunedCore{std::move(core), std::move(free_steps),
                    std::move(bridge_constraints)};
}

}  // namespace wsp
