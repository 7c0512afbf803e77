#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "wsp/core.hpp"
#include "wsp/errors.hpp"
#include "wsp/options.hpp"
#include "wsp/solve.hpp"

namespace wsp {

// ---------------------------------------------------------------------------
// Workflow formulas: n-ary serial / parallel / xor composition over steps.
// The binary operators of the composition algebra are associative, so nested
// same-operator nodes are flattened on construction; execution sets and the
// sharp/flat counts are unchanged by this.
// ---------------------------------------------------------------------------

class WorkflowFormula {
 public:
  enum class Op { Step, Serial, Parallel, Xor };

  static WorkflowFormula step(StepId s) {
    WorkflowFormula f(Op::Step);
    f.step_ = s;
    return f;
  }

  static WorkflowFormula serial(std::vector<WorkflowFormula> children) {
    return composite(Op::Serial, std::move(children));
  }

  static WorkflowFormula parallel(std::vector<WorkflowFormula> children) {
    return composite(Op::Parallel, std::move(children));
  }

  static WorkflowFormula exclusive(std::vector<WorkflowFormula> children) {
    return composite(Op::Xor, std::move(children));
  }

  Op op() const noexcept { return op_; }

  StepId leaf_step() const {
    if (op_ != Op::Step) throw ContractViolation("leaf_step(): not a leaf");
    return step_;
  }

  const std::vector<WorkflowFormula>& children() const noexcept {
    return children_;
  }

  /// Leaves in left-to-right order.
  std::vector<StepId> leaf_steps() const {
    std::vector<StepId> out;
    collect_leaves(out);
    return out;
  }

  std::size_t node_count() const {
    std::size_t n = 1;
    for (const auto& c : children_) n += c.node_count();
    return n;
  }

 private:
  explicit WorkflowFormula(Op op) : op_(op) {}

  static WorkflowFormula composite(Op op, std::vector<WorkflowFormula> children) {
    if (children.size() < 2)
      throw ValidationError("composition requires at least two operands");
    WorkflowFormula f(op);
    for (auto& c : children) {
      if (c.op_ == op) {
        for (auto& grand : c.children_) f.children_.push_back(std::move(grand));
      } else {
        f.children_.push_back(std::move(c));
      }
    }
    std::vector<StepId> leaves = f.leaf_steps();
    std::sort(leaves.begin(), leaves.end());
    if (std::adjacent_find(leaves.begin(), leaves.end()) != leaves.end())
      throw ValidationError("composed workflows must have disjoint steps");
    return f;
  }

  void collect_leaves(std::vector<StepId>& out) const {
    if (op_ == Op::Step) {
      out.push_back(step_);
      return;
    }
    for (const auto& c : children_) c.collect_leaves(out);
  }

  Op op_;
  StepId step_{};
  std::vector<WorkflowFormula> children_;
};

/// Node with the given preorder index (root is 0).
inline const WorkflowFormula& node_at(const WorkflowFormula& root,
                                      std::size_t preorder) {
  const WorkflowFormula* found = nullptr;
  std::size_t counter = 0;
  auto walk = [&](auto&& self, const WorkflowFormula& node) -> void {
    if (found) return;
    if (counter++ == preorder) {
      found = &node;
      return;
    }
    for (const auto& c : node.children()) self(self, c);
  };
  walk(walk, root);
  if (!found) throw ContractViolation("node_at(): preorder index out of range");
  return *found;
}

// ---------------------------------------------------------------------------
// sharp / flat: number of execution sets and maximum execution-set size,
// computed by post-order recurrences without materializing any set.
// ---------------------------------------------------------------------------

inline std::uint64_t sharp(const WorkflowFormula& f) {
  switch (f.op()) {
    case WorkflowFormula::Op::Step:
      return 1;
    case WorkflowFormula::Op::Serial:
    case WorkflowFormula::Op::Parallel: {
      std::uint64_t product = 1;
      for (const auto& c : f.children()) {
        const std::uint64_t s = sharp(c);
        if (s != 0 && product > UINT64_MAX / s) return UINT64_MAX;
        product *= s;
      }
      return product;
    }
    case WorkflowFormula::Op::Xor: {
      std::uint64_t sum = 0;
      for (const auto& c : f.children()) {
        const std::uint64_t s = sharp(c);
        if (sum > UINT64_MAX - s) return UINT64_MAX;
        sum += s;
      }
      return sum;
    }
  }
  return 1;
}

inline std::uint64_t flat(const WorkflowFormula& f) {
  switch (f.op()) {
    case WorkflowFormula::Op::Step:
      return 1;
    case WorkflowFormula::Op::Serial:
    case WorkflowFormula::Op::Parallel: {
      std::uint64_t sum = 0;
      for (const auto& c : f.children()) sum += flat(c);
      return sum;
    }
    case WorkflowFormula::Op::Xor: {
      std::uint64_t best = 0;
      for (const auto& c : f.children()) best = std::max(best, flat(c));
      return best;
    }
  }
  return 1;
}

// ---------------------------------------------------------------------------
// Graph construction. Every leaf is wrapped alpha -> s -> omega; serial
// composition fuses each omega/alpha boundary into a single connector node;
// parallel and xor composition introduce fork/join gateways that absorb the
// operands' start and finish nodes. All introduced nodes are orchestration
// steps: no processing, no authorizations, no constraints.
// ---------------------------------------------------------------------------

struct BuiltGraph {
  StepDag dag;
  /// The schema's step names extended with the orchestration node names
  /// (all prefixed with '@').
  SymbolTable names;
};

namespace detail {

struct GraphAssembly {
  std::vector<std::string> node_names;
  std::vector<bool> orchestration;
  std::vector<std::uint32_t> alias;  // forwarding after merges
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
  std::uint32_t counters[4] = {0, 0, 0, 0};  // start/end, seq, par, xor

  std::uint32_t add(std::string name, bool orch) {
    node_names.push_back(std::move(name));
    orchestration.push_back(orch);
    alias.push_back(static_cast<std::uint32_t>(alias.size()));
    return static_cast<std::uint32_t>(alias.size() - 1);
  }

  std::uint32_t resolve(std::uint32_t id) {
    while (alias[id] != id) {
      alias[id] = alias[alias[id]];
      id = alias[id];
    }
    return id;
  }

  void merge_into(std::uint32_t victim, std::uint32_t target) {
    alias[resolve(victim)] = resolve(target);
  }
};

struct SubGraph {
  std::uint32_t alpha;
  std::uint32_t omega;
};

inline SubGraph assemble_graph(const WorkflowFormula& f, GraphAssembly& g) {
  using Op = WorkflowFormula::Op;
  switch (f.op()) {
    case Op::Step: {
      const std::uint32_t n = g.counters[0]++;
      std::uint32_t a = g.add("@start" + std::to_string(n), true);
      std::uint32_t s = g.add(std::string(), false);  // name filled by caller
      g.node_names[s] = "#leaf:" + std::to_string(f.leaf_step().value);
      std::uint32_t w = g.add("@end" + std::to_string(n), true);
      g.edges.emplace_back(a, s);
      g.edges.emplace_back(s, w);
      return {a, w};
    }
    case Op::Serial: {
      SubGraph acc = assemble_graph(f.children().front(), g);
      for (std::size_t i = 1; i < f.children().size(); ++i) {
        SubGraph next = assemble_graph(f.children()[i], g);
        const std::uint32_t n = g.counters[1]++;
        std::uint32_t eps = g.add("@seq" + std::to_string(n), true);
        g.merge_into(acc.omega, eps);
        g.merge_into(next.alpha, eps);
        acc.omega = next.omega;
      }
      return acc;
    }
    case Op::Parallel:
    case Op::Xor: {
      const bool is_xor = f.op() == Op::Xor;
      const std::uint32_t n = g.counters[is_xor ? 3 : 2]++;
      const char* label = is_xor ? "@xor" : "@par";
      std::uint32_t fork = g.add(label + std::to_string(n), true);
      std::uint32_t join =
          g.add(std::string(label) + "end" + std::to_string(n), true);
      for (const auto& child : f.children()) {
        SubGraph sub = assemble_graph(child, g);
        g.merge_into(sub.alpha, fork);
        g.merge_into(sub.omega, join);
      }
      return {fork, join};
    }
  }
  throw Error("internal: unknown formula node");
}

}  // namespace detail

inline BuiltGraph build_graph(const WorkflowFormula& formula,
                              const SymbolTable& step_names) {
  detail::GraphAssembly g;
  detail::assemble_graph(formula, g);

  SymbolTable names = step_names;
  std::vector<StepId> steps;
  std::vector<StepId> orchestration;
  std::vector<std::uint32_t> final_id(g.node_names.size(), 0);

  for (std::uint32_t id = 0; id < g.node_names.size(); ++id) {
    if (g.resolve(id) != id) continue;  // merged away
    std::uint32_t fid;
    if (g.orchestration[id]) {
      fid = names.intern(g.node_names[id]);
      orchestration.push_back(StepId{fid});
    } else {
      // "#leaf:<id>" placeholder refers back to the schema step table.
      fid = static_cast<std::uint32_t>(
          std::stoul(g.node_names[id].substr(6)));
      if (fid >= step_names.size())
        throw ContractViolation("formula leaf outside the step table");
    }
    final_id[id] = fid;
    steps.push_back(StepId{fid});
  }

  std::vector<std::pair<StepId, StepId>> edges;
  edges.reserve(g.edges.size());
  for (auto [a, b] : g.edges)
    edges.emplace_back(StepId{final_id[g.resolve(a)]},
                       StepId{final_id[g.resolve(b)]});

  return BuiltGraph{StepDag(std::move(steps), std::move(edges),
                            std::move(orchestration)),
                    std::move(names)};
}

// ---------------------------------------------------------------------------
// Execution sets
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<std::vector<StepId>> execution_sets_rec(
    const WorkflowFormula& f) {
  using Op = WorkflowFormula::Op;
  if (f.op() == Op::Step) return {{f.leaf_step()}};
  if (f.op() == Op::Xor) {
    std::vector<std::vector<StepId>> out;
    for (const auto& c : f.children()) {
      auto sub = execution_sets_rec(c);
      out.insert(out.end(), std::make_move_iterator(sub.begin()),
                 std::make_move_iterator(sub.end()));
    }
    return out;
  }
  // Serial / parallel: unions over the product, rightmost child fastest.
  std::vector<std::vector<StepId>> out{{}};
  for (const auto& c : f.children()) {
    auto sub = execution_sets_rec(c);
    std::vector<std::vector<StepId>> next;
    next.reserve(out.size() * sub.size());
    for (const auto& prefix : out) {
      for (const auto& extension : sub) {
        std::vector<StepId> merged;
        merged.reserve(prefix.size() + extension.size());
        std::set_union(prefix.begin(), prefix.end(), extension.begin(),
                       extension.end(), std::back_inserter(merged));
        next.push_back(std::move(merged));
      }
    }
    out = std::move(next);
  }
  return out;
}

}  // namespace detail

/// All execution sets (processing steps only, each sorted), in the order the
/// recursion produces them: xor branches left to right, serial/parallel
/// products with the rightmost operand varying fastest.
inline std::vector<std::vector<StepId>> execution_sets(
    const WorkflowFormula& formula, const Caps& caps = {}) {
  const std::uint64_t count = sharp(formula);
  if (count > caps.max_execution_sets)
    throw ResourceLimitError("execution-set count " + std::to_string(count) +
                             " exceeds the cap of " +
                             std::to_string(caps.max_execution_sets));
  auto sets = detail::execution_sets_rec(formula);
  // Distinct derivations cannot collide while leaves are disjoint; keep that
  // honest rather than silently deduplicating.
  auto dedup = sets;
  std::sort(dedup.begin(), dedup.end());
  dedup.erase(std::unique(dedup.begin(), dedup.end()), dedup.end());
  if (dedup.size() != sets.size() || sets.size() != count)
    throw Error("internal: execution-set count disagrees with sharp()");
  return sets;
}

// ---------------------------------------------------------------------------
// Conditional schema: a workflow formula plus users, authorizations over the
// processing steps and constraints. Each constraint is tagged with the
// formula node at which it attaches (the lowest node covering its scopes);
// constraints crossing xor branches serve no purpose and are rejected, as
// are constraints on orchestration nodes (the grammar cannot even name
// them).
// ---------------------------------------------------------------------------

class ConditionalSchema {
 public:
  ConditionalSchema(SymbolTable step_names, SymbolTable user_names,
                    WorkflowFormula formula,
                    std::vector<std::pair<StepId, UserId>> auth,
                    std::vector<Constraint> constraints)
      : step_names_(std::move(step_names)),
        user_names_(std::move(user_names)),
        formula_(std::move(formula)),
        auth_(std::move(auth)),
        constraints_(std::move(constraints)) {
    std::vector<StepId> leaves = formula_.leaf_steps();
    std::sort(leaves.begin(), leaves.end());
    for (StepId s : leaves)
      if (s.value >= step_names_.size())
        throw ValidationError("formula leaf outside the step table");

    auto is_leaf = [&](StepId s) {
      return std::binary_search(leaves.begin(), leaves.end(), s);
    };

    std::vector<bool> has_auth(step_names_.size(), false);
    for (auto [s, u] : auth_) {
      if (!is_leaf(s))
        throw ValidationError("authorization names a step outside the formula");
      if (u.value >= user_names_.size())
        throw ValidationError("authorization for unknown user");
      has_auth[s.value] = true;
    }
    for (StepId s : leaves)
      if (!has_auth[s.value])
        throw ValidationError("step '" + step_names_.name(s.value) +
                              "' has no authorized user");

    constraint_nodes_.reserve(constraints_.size());
    for (const Constraint& c : constraints_) {
      for (StepId s : c.scope1())
        if (!is_leaf(s))
          throw ValidationError("constraint scope outside the formula");
      for (StepId s : c.scope2())
        if (!is_leaf(s))
          throw ValidationError("constraint scope outside the formula");
      std::vector<StepId> scope_union;
      std::set_union(c.scope1().begin(), c.scope1().end(), c.scope2().begin(),
                     c.scope2().end(), std::back_inserter(scope_union));
      const std::size_t node = lowest_covering_node(scope_union);
      if (node_at(formula_, node).op() == WorkflowFormula::Op::Xor)
        throw ValidationError(
            "constraint spans xor branches; no plan can ever see both sides");
      constraint_nodes_.push_back(node);
    }
  }

  const SymbolTable& step_names() const noexcept { return step_names_; }
  const SymbolTable& user_names() const noexcept { return user_names_; }
  const WorkflowFormula& formula() const noexcept { return formula_; }
  const std::vector<std::pair<StepId, UserId>>& auth() const noexcept {
    return auth_;
  }
  const std::vector<Constraint>& constraints() const noexcept {
    return constraints_;
  }

  /// Preorder index of the formula node each constraint attaches to.
  const std::vector<std::size_t>& constraint_nodes() const noexcept {
    return constraint_nodes_;
  }

  BuiltGraph graph() const { return build_graph(formula_, step_names_); }

 private:
  /// Preorder index of the lowest formula node whose leaves cover `scope`.
  std::size_t lowest_covering_node(const std::vector<StepId>& scope) const {
    const WorkflowFormula* node = &formula_;
    std::size_t index = 0;
    auto covers = [](const WorkflowFormula& f,
                     const std::vector<StepId>& wanted) {
      std::vector<StepId> leaves = f.leaf_steps();
      std::sort(leaves.begin(), leaves.end());
      return std::includes(leaves.begin(), leaves.end(), wanted.begin(),
                           wanted.end());
    };
    if (!covers(*node, scope))
      throw ValidationError("constraint scope outside the formula");
    for (;;) {
      std::size_t child_index = index + 1;
      bool descended = false;
      for (const auto& child : node->children()) {
        if (covers(child, scope)) {
          node = &child;
          index = child_index;
          descended = true;
          break;
        }
        child_index += child.node_count();
      }
      if (!descended) return index;
    }
  }

  SymbolTable step_names_;
  SymbolTable user_names_;
  WorkflowFormula formula_;
  std::vector<std::pair<StepId, UserId>> auth_;
  std::vector<Constraint> constraints_;
  std::vector<std::size_t> constraint_nodes_;
};

// ---------------------------------------------------------------------------
// Derived deterministic workflows: one plain schema per execution set, with
// the ordering, authorizations and constraints cut down to the set. A
// constraint survives only when both scopes still intersect the set.
// ---------------------------------------------------------------------------

inline std::vector<WorkflowSchema> derive_schemas(const ConditionalSchema& cs,
                                                  const Caps& caps = {}) {
  BuiltGraph graph = cs.graph();
  auto sets = execution_sets(cs.formula(), caps);
  std::sort(sets.begin(), sets.end(), [](const auto& a, const auto& b) {
    if (a.size() != b.size()) return a.size() < b.size();
    return a < b;
  });

  std::vector<WorkflowSchema> out;
  out.reserve(sets.size());
  for (const auto& set : sets) {
    std::vector<std::pair<StepId, UserId>> auth;
    for (auto [s, u] : cs.auth())
      if (std::binary_search(set.begin(), set.end(), s)) auth.emplace_back(s, u);

    std::vector<Constraint> constraints;
    for (const Constraint& c : cs.constraints()) {
      std::vector<StepId> left, right;
      std::set_intersection(c.scope1().begin(), c.scope1().end(), set.begin(),
                            set.end(), std::back_inserter(left));
      std::set_intersection(c.scope2().begin(), c.scope2().end(), set.begin(),
                            set.end(), std::back_inserter(right));
      if (!left.empty() && !right.empty())
        constraints.push_back(
            Constraint(c.relation(), std::move(left), std::move(right)));
    }

    out.push_back(WorkflowSchema(cs.step_names(), cs.user_names(),
                                 graph.dag.induced(set), std::move(auth),
                                 std::move(constraints)));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Weak / strong satisfiability
// ---------------------------------------------------------------------------

enum class SatMode { Weak, Strong };

struct ExecutionSetResult {
  std::vector<StepId> steps;
  SolveResult result;
};

struct ConditionalReport {
  std::vector<ExecutionSetResult> per_set;
  bool weak = false;
  bool strong = true;
  /// Verdict selected by the requested mode.
  bool verdict = false;
};

/// Solve every derived deterministic schema and aggregate. Weak: some
/// derived schema is satisfiable. Strong: all are (an unsatisfiable derived
/// schema is an execution path that can never complete).
inline ConditionalReport satisfiable(const ConditionalSchema& cs, SatMode mode,
                                     const Caps& caps = {}) {
  ConditionalReport report;
  auto schemas = derive_schemas(cs, caps);
  report.per_set.reserve(schemas.size());
  for (const auto& schema : schemas) {
    SolveResult result = solve_auto(schema, caps);
    report.weak = report.weak || result.sat();
    report.strong = report.strong && result.sat();
    report.per_set.push_back(ExecutionSetResult{schema.steps(), std::move(result)});
  }
  if (schemas.empty()) report.strong = false;  // unreachable: sharp >= 1
  report.verdict = mode == SatMode::Weak ? report.weak : report.strong;
  return report;
}

// ---------------------------------------------------------------------------
// The extremal xor construction: the serial composition of xor blocks of
// three (and at most two blocks of two) attains the maximum number of
// execution sets achievable with k steps.
// ---------------------------------------------------------------------------

struct MaxXorWorkflow {
  WorkflowFormula formula;
  SymbolTable step_names;
};

/// Maximum achievable execution-set count for k steps:
/// 3^a for k = 3a, 4 * 3^(a-1) for k = 3a + 1, 2 * 3^a for k = 3a + 2.
inline std::uint64_t max_execution_sets_bound(std::uint32_t k) {
  if (k == 0) throw ContractViolation("k must be at least 1");
  const std::uint32_t a = k / 3;
  switch (k % 3) {
    case 0:
      return detail::saturating_pow(3, a);
    case 1:
      return k == 1 ? 1 : 4 * detail::saturating_pow(3, a - 1);
    default:
      return 2 * detail::saturating_pow(3, a);
  }
}

inline MaxXorWorkflow build_max_xor_workflow(std::uint32_t k) {
  if (k == 0) throw ContractViolation("k must be at least 1");
  SymbolTable names;
  std::uint32_t next = 0;
  auto make_block = [&](std::uint32_t size) {
    std::vector<WorkflowFormula> leaves;
    leaves.reserve(size);
    for (std::uint32_t i = 0; i < size; ++i) {
      std::uint32_t id = names.intern("s" + std::to_string(++next));
      leaves.push_back(WorkflowFormula::step(StepId{id}));
    }
    if (size == 1) return std::move(leaves.front());
    return WorkflowFormula::exclusive(std::move(leaves));
  };

  std::vector<std::uint32_t> block_sizes;
  const std::uint32_t a = k / 3;
  switch (k % 3) {
    case 0:
      block_sizes.assign(a, 3);
      break;
    case 1:
      if (k == 1) {
        block_sizes.assign(1, 1);
      } else {
        block_sizes.assign(a - 1, 3);
        block_sizes.push_back(2);
        block_sizes.push_back(2);
      }
      break;
    default:
      block_sizes.assign(a, 3);
      block_sizes.push_back(2);
      break;
  }

  std::vector<WorkflowFormula> blocks;
  blocks.reserve(block_sizes.size());
  for (std::uint32_t size : block_sizes) blocks.push_back(make_block(size));

  WorkflowFormula formula =
      blocks.size() == 1 ? std::move(blocks.front())
                         : WorkflowFormula::serial(std::move(blocks));
  return MaxXorWorkflow{std::move(formula), std::move(names)};
}

}  // namespace wsp
