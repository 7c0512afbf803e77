#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "wsp/errors.hpp"

namespace wsp {

// ---------------------------------------------------------------------------
// Identifiers
//
// Steps and users are interned strings; the numeric index gives a stable
// total order, and every enumeration order in the library derives from it.
// ---------------------------------------------------------------------------

struct StepId {
  std::uint32_t value = 0;
  friend constexpr auto operator<=>(StepId, StepId) = default;
};

struct UserId {
  std::uint32_t value = 0;
  friend constexpr auto operator<=>(UserId, UserId) = default;
};

/// Interning pool mapping names to dense indices.
class SymbolTable {
 public:
  std::uint32_t intern(std::string_view name) {
    auto it = index_.find(std::string(name));
    if (it != index_.end()) return it->second;
    std::uint32_t id = static_cast<std::uint32_t>(names_.size());
    names_.emplace_back(name);
    index_.emplace(names_.back(), id);
    return id;
  }

  std::optional<std::uint32_t> find(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  const std::string& name(std::uint32_t id) const {
    if (id >= names_.size()) throw ContractViolation("symbol id out of range");
    return names_[id];
  }

  std::size_t size() const noexcept { return names_.size(); }

  friend bool operator==(const SymbolTable& a, const SymbolTable& b) {
    return a.names_ == b.names_;
  }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

// ---------------------------------------------------------------------------
// User relations
// ---------------------------------------------------------------------------

/// A binary relation on users. The diagonal ("same user") and its complement
/// ("different users") are built in; anything else is an explicit pair set.
/// Complement and transpose stay within these three kinds.
class UserRelation {
 public:
  enum class Kind { Diagonal, NotDiagonal, Explicit };

  static UserRelation diagonal() { return UserRelation(Kind::Diagonal); }
  static UserRelation not_diagonal() { return UserRelation(Kind::NotDiagonal); }

  static UserRelation explicit_pairs(std::vector<std::pair<UserId, UserId>> pairs,
                                     std::string label = {}) {
    UserRelation r(Kind::Explicit);
    std::sort(pairs.begin(), pairs.end());
    pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
    r.pairs_ = std::move(pairs);
    r.label_ = std::move(label);
    return r;
  }

  Kind kind() const noexcept { return kind_; }

  /// Name carried from the DSL (`rel NAME(...)`); empty for eq/ne and for
  /// relations produced by transpose/complement.
  const std::string& label() const noexcept { return label_; }

  bool contains(UserId u, UserId v) const {
    switch (kind_) {
      case Kind::Diagonal:
        return u == v;
      case Kind::NotDiagonal:
        return u != v;
      case Kind::Explicit:
        return std::binary_search(pairs_.begin(), pairs_.end(), std::pair(u, v));
    }
    return false;
  }

  /// The pair set; meaningful only for Explicit relations.
  const std::vector<std::pair<UserId, UserId>>& pairs() const noexcept {
    return pairs_;
  }

  /// { (u,v) : (v,u) in this }.
  UserRelation transposed() const {
    switch (kind_) {
      case Kind::Diagonal:
      case Kind::NotDiagonal:
        return *this;
      case Kind::Explicit: {
        std::vector<std::pair<UserId, UserId>> swapped;
        swapped.reserve(pairs_.size());
        for (auto [u, v] : pairs_) swapped.emplace_back(v, u);
        return explicit_pairs(std::move(swapped));
      }
    }
    return *this;
  }

  /// Complement within U x U for a user universe of size `user_count`.
  /// For Explicit relations the result is materialized over U x U.
  UserRelation complemented(std::uint32_t user_count) const {
    switch (kind_) {
      case Kind::Diagonal:
        return not_diagonal();
      case Kind::NotDiagonal:
        return diagonal();
      case Kind::Explicit: {
        std::vector<std::pair<UserId, UserId>> rest;
        rest.reserve(static_cast<std::size_t>(user_count) * user_count -
                     pairs_.size());
        for (std::uint32_t u = 0; u < user_count; ++u) {
          for (std::uint32_t v = 0; v < user_count; ++v) {
            std::pair<UserId, UserId> p{UserId{u}, UserId{v}};
            if (!std::binary_search(pairs_.begin(), pairs_.end(), p)) {
              rest.push_back(p);
            }
          }
        }
        return explicit_pairs(std::move(rest));
      }
    }
    return *this;
  }

  bool is_symmetric() const {
    if (kind_ != Kind::Explicit) return true;
    return pairs_ == transposed().pairs_;
  }

  /// Semantic equality; the label does not participate.
  friend bool operator==(const UserRelation& a, const UserRelation& b) {
    return a.kind_ == b.kind_ && a.pairs_ == b.pairs_;
  }

 private:
  explicit UserRelation(Kind kind) : kind_(kind) {}

  Kind kind_;
  std::vector<std::pair<UserId, UserId>> pairs_;  // sorted, Explicit only
  std::string label_;
};

// ---------------------------------------------------------------------------
// Step DAG
// ---------------------------------------------------------------------------

/// Directed acyclic graph over steps. The reflexive-transitive closure is
/// precomputed so `leq` (the induced partial order) is a table lookup.
/// Orchestration steps (workflow-management markers from composition) may be
/// flagged; they carry no processing, no authorizations and no constraints.
class StepDag {
 public:
  StepDag() = default;

  StepDag(std::vector<StepId> steps, std::vector<std::pair<StepId, StepId>> edges,
          std::vector<StepId> orchestration = {}) {
    std::sort(steps.begin(), steps.end());
    steps.erase(std::unique(steps.begin(), steps.end()), steps.end());
    steps_ = std::move(steps);

    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    for (auto [a, b] : edges) {
      if (!contains(a) || !contains(b))
        throw ValidationError("edge endpoint is not a declared step");
      if (a == b) throw ValidationError("self-loop in step graph");
    }
    edges_ = std::move(edges);

    orch_.assign(steps_.size(), false);
    for (StepId s : orchestration) {
      if (!contains(s))
        throw ValidationError("orchestration flag on unknown step");
      orch_[pos(s)] = true;
    }

    build_closure();
  }

  const std::vector<StepId>& steps() const noexcept { return steps_; }
  const std::vector<std::pair<StepId, StepId>>& edges() const noexcept {
    return edges_;
  }
  std::size_t size() const noexcept { return steps_.size(); }

  bool contains(StepId s) const {
    return std::binary_search(steps_.begin(), steps_.end(), s);
  }

  bool is_orchestration(StepId s) const { return orch_[pos(s)]; }

  bool has_orchestration() const {
    return std::find(orch_.begin(), orch_.end(), true) != orch_.end();
  }

  std::vector<StepId> processing_steps() const {
    std::vector<StepId> out;
    for (std::size_t i = 0; i < steps_.size(); ++i)
      if (!orch_[i]) out.push_back(steps_[i]);
    return out;
  }

  /// a <= b in the induced partial order (reflexive).
  bool leq(StepId a, StepId b) const { return leq_[pos(a)][pos(b)]; }

  bool lt(StepId a, StepId b) const { return a != b && leq(a, b); }

  bool incomparable(StepId a, StepId b) const {
    return !leq(a, b) && !leq(b, a);
  }

  std::vector<StepId> predecessors(StepId s) const {
    std::vector<StepId> out;
    for (auto [a, b] : edges_)
      if (b == s) out.push_back(a);
    return out;
  }

  /// Induced sub-DAG on `subset`: the partial order restricted to the subset,
  /// represented by its transitive reduction. Orchestration flags are not
  /// carried over.
  StepDag induced(std::vector<StepId> subset) const {
    std::sort(subset.begin(), subset.end());
    subset.erase(std::unique(subset.begin(), subset.end()), subset.end());
    for (StepId s : subset)
      if (!contains(s)) throw ContractViolation("induced: step not in dag");
    std::vector<std::pair<StepId, StepId>> reduced;
    for (StepId a : subset) {
      for (StepId b : subset) {
        if (!lt(a, b)) continue;
        bool direct = true;
        for (StepId m : subset) {
          if (m != a && m != b && lt(a, m) && lt(m, b)) {
            direct = false;
            break;
          }
        }
        if (direct) reduced.emplace_back(a, b);
      }
    }
    return StepDag(std::move(subset), std::move(reduced));
  }

 private:
  std::size_t pos(StepId s) const {
    auto it = std::lower_bound(steps_.begin(), steps_.end(), s);
    if (it == steps_.end() || *it != s)
      throw ContractViolation("step not in dag");
    return static_cast<std::size_t>(it - steps_.begin());
  }

  void build_closure() {
    const std::size_t n = steps_.size();
    std::vector<std::vector<std::size_t>> succ(n);
    std::vector<std::size_t> indeg(n, 0);
    for (auto [a, b] : edges_) {
      succ[pos(a)].push_back(pos(b));
      ++indeg[pos(b)];
    }
    // Kahn's algorithm both detects cycles and gives a topological order
    // for the closure sweep.
    std::vector<std::size_t> order;
    order.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
      if (indeg[i] == 0) order.push_back(i);
    for (std::size_t head = 0; head < order.size(); ++head) {
      for (std::size_t next : succ[order[head]])
        if (--indeg[next] == 0) order.push_back(next);
    }
    if (order.size() != n) throw ValidationError("step graph has a cycle");

    leq_.assign(n, std::vector<bool>(n, false));
    for (std::size_t i = 0; i < n; ++i) leq_[i][i] = true;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      std::size_t v = *it;
      for (std::size_t next : succ[v]) {
        for (std::size_t j = 0; j < n; ++j)
          if (leq_[next][j]) leq_[v][j] = true;
      }
    }
  }

  std::vector<StepId> steps_;
  std::vector<std::pair<StepId, StepId>> edges_;
  std::vector<bool> orch_;
  std::vector<std::vector<bool>> leq_;
};

// ---------------------------------------------------------------------------
// Constraints
// ---------------------------------------------------------------------------

/// A workflow constraint (rho, S1, S2). Type 1 when both scopes are
/// singletons, Type 2 when exactly one is, Type 3 otherwise.
class Constraint {
 public:
  Constraint(UserRelation relation, std::vector<StepId> scope1,
             std::vector<StepId> scope2)
      : relation_(std::move(relation)) {
    auto norm = [](std::vector<StepId>& v) {
      std::sort(v.begin(), v.end());
      v.erase(std::unique(v.begin(), v.end()), v.end());
    };
    norm(scope1);
    norm(scope2);
    if (scope1.empty() || scope2.empty())
      throw ValidationError("constraint scope must be nonempty");
    scope1_ = std::move(scope1);
    scope2_ = std::move(scope2);
  }

  const UserRelation& relation() const noexcept { return relation_; }
  const std::vector<StepId>& scope1() const noexcept { return scope1_; }
  const std::vector<StepId>& scope2() const noexcept { return scope2_; }

  int type() const noexcept {
    int singletons = (scope1_.size() == 1) + (scope2_.size() == 1);
    return singletons == 2 ? 1 : singletons == 1 ? 2 : 3;
  }

  bool is_type1() const noexcept { return type() == 1; }

  StepId s1() const {
    if (scope1_.size() != 1) throw ContractViolation("s1(): scope1 not singleton");
    return scope1_.front();
  }
  StepId s2() const {
    if (scope2_.size() != 1) throw ContractViolation("s2(): scope2 not singleton");
    return scope2_.front();
  }

  friend bool operator==(const Constraint& a, const Constraint& b) {
    return a.relation_ == b.relation_ && a.scope1_ == b.scope1_ &&
           a.scope2_ == b.scope2_;
  }

 private:
  UserRelation relation_;
  std::vector<StepId> scope1_;
  std::vector<StepId> scope2_;
};

// ---------------------------------------------------------------------------
// Plans
// ---------------------------------------------------------------------------

/// A (possibly partial) assignment of users to steps; a plan for a schema is
/// total on the schema's step set.
class Plan {
 public:
  Plan() = default;

  explicit Plan(std::vector<std::pair<StepId, UserId>> assignment) {
    std::sort(assignment.begin(), assignment.end());
    for (std::size_t i = 1; i < assignment.size(); ++i) {
      if (assignment[i - 1].first == assignment[i].first)
        throw ContractViolation("plan assigns a step twice");
    }
    entries_ = std::move(assignment);
  }

  bool contains(StepId s) const { return lookup(s) != nullptr; }

  UserId at(StepId s) const {
    const UserId* u = lookup(s);
    if (!u) throw ContractViolation("plan does not cover step");
    return *u;
  }

  const std::vector<std::pair<StepId, UserId>>& entries() const noexcept {
    return entries_;
  }

  std::size_t size() const noexcept { return entries_.size(); }

  Plan with(StepId s, UserId u) const {
    auto copy = entries_;
    copy.emplace_back(s, u);
    return Plan(std::move(copy));
  }

  friend bool operator==(const Plan&, const Plan&) = default;

 private:
  const UserId* lookup(StepId s) const {
    auto it = std::lower_bound(
        entries_.begin(), entries_.end(), s,
        [](const auto& e, StepId key) { return e.first < key; });
    if (it == entries_.end() || it->first != s) return nullptr;
    return &it->second;
  }

  std::vector<std::pair<StepId, UserId>> entries_;
};

// ---------------------------------------------------------------------------
// Workflow schema
// ---------------------------------------------------------------------------

/// A constrained workflow authorization schema: step DAG, users, the
/// authorization relation and a constraint list. Deterministic schemas only —
/// orchestration steps are rejected here (they belong to ConditionalSchema
/// graphs). Immutable after construction.
///
/// Ingest normalizes Type 2 constraints: (=, s, S') with s in S' is dropped
/// as redundant, and (!=, s, S') with s in S' loses s from S'.
class WorkflowSchema {
 public:
  WorkflowSchema(SymbolTable step_names, SymbolTable user_names, StepDag dag,
                 std::vector<std::pair<StepId, UserId>> auth,
                 std::vector<Constraint> constraints)
      : step_names_(std::move(step_names)),
        user_names_(std::move(user_names)),
        dag_(std::move(dag)) {
    if (dag_.has_orchestration())
      throw ValidationError("schema steps must all be processing steps");
    for (StepId s : dag_.steps())
      if (s.value >= step_names_.size())
        throw ValidationError("step id outside the name table");

    auth_.assign(step_names_.size(), {});
    for (auto [s, u] : auth) {
      if (!dag_.contains(s))
        throw ValidationError("authorization for unknown step");
      if (u.value >= user_names_.size())
        throw ValidationError("authorization for unknown user");
      auth_[s.value].push_back(u);
    }
    for (auto& users : auth_) {
      std::sort(users.begin(), users.end());
      users.erase(std::unique(users.begin(), users.end()), users.end());
    }
    for (StepId s : dag_.steps()) {
      if (auth_[s.value].empty())
        throw ValidationError("step '" + step_names_.name(s.value) +
                              "' has no authorized user");
    }

    constraints_.reserve(constraints.size());
    for (Constraint& c : constraints) {
      for (StepId s : c.scope1())
        if (!dag_.contains(s))
          throw ValidationError("constraint scope outside the step set");
      for (StepId s : c.scope2())
        if (!dag_.contains(s))
          throw ValidationError("constraint scope outside the step set");
      if (c.relation().kind() == UserRelation::Kind::Explicit) {
        for (auto [u, v] : c.relation().pairs())
          if (u.value >= user_names_.size() || v.value >= user_names_.size())
            throw ValidationError("relation pair names unknown user");
      }
      if (auto normalized = normalize_type2(c)) {
        constraints_.push_back(std::move(*normalized));
      }
    }
  }

  const SymbolTable& step_names() const noexcept { return step_names_; }
  const SymbolTable& user_names() const noexcept { return user_names_; }
  const StepDag& dag() const noexcept { return dag_; }
  const std::vector<StepId>& steps() const noexcept { return dag_.steps(); }

  std::uint32_t user_count() const noexcept {
    return static_cast<std::uint32_t>(user_names_.size());
  }

  std::vector<UserId> users() const {
    std::vector<UserId> out;
    out.reserve(user_names_.size());
    for (std::uint32_t i = 0; i < user_names_.size(); ++i)
      out.push_back(UserId{i});
    return out;
  }

  const std::vector<UserId>& authorized(StepId s) const {
    if (!dag_.contains(s)) throw ContractViolation("authorized(): unknown step");
    return auth_[s.value];
  }

  bool authorizes(StepId s, UserId u) const {
    const auto& users = authorized(s);
    return std::binary_search(users.begin(), users.end(), u);
  }

  std::vector<std::pair<StepId, UserId>> auth_pairs() const {
    std::vector<std::pair<StepId, UserId>> out;
    for (StepId s : dag_.steps())
      for (UserId u : auth_[s.value]) out.emplace_back(s, u);
    return out;
  }

  const std::vector<Constraint>& constraints() const noexcept {
    return constraints_;
  }

  /// Same schema with a replacement constraint list.
  WorkflowSchema with_constraints(std::vector<Constraint> constraints) const {
    return WorkflowSchema(step_names_, user_names_, dag_, auth_pairs(),
                          std::move(constraints));
  }

  /// Same schema with a replacement authorization relation.
  WorkflowSchema with_auth(std::vector<std::pair<StepId, UserId>> auth) const {
    return WorkflowSchema(step_names_, user_names_, dag_, std::move(auth),
                          constraints_);
  }

 private:
  static std::optional<Constraint> normalize_type2(const Constraint& c) {
    if (c.type() != 2) return c;
    const bool first_single = c.scope1().size() == 1;
    StepId single = first_single ? c.scope1().front() : c.scope2().front();
    const auto& set = first_single ? c.scope2() : c.scope1();
    if (!std::binary_search(set.begin(), set.end(), single)) return c;

    if (c.relation().kind() == UserRelation::Kind::Diagonal)
      return std::nullopt;  // satisfied by every plan
    if (c.relation().kind() == UserRelation::Kind::NotDiagonal) {
      std::vector<StepId> trimmed;
      trimmed.reserve(set.size() - 1);
      for (StepId s : set)
        if (s != single) trimmed.push_back(s);
      if (first_single)
        return Constraint(c.relation(), c.scope1(), std::move(trimmed));
      return Constraint(c.relation(), std::move(trimmed), c.scope2());
    }
    return c;
  }

  SymbolTable step_names_;
  SymbolTable user_names_;
  StepDag dag_;
  std::vector<std::vector<UserId>> auth_;  // indexed by raw step id
  std::vector<Constraint> constraints_;
};

// ---------------------------------------------------------------------------
// Plan validity
// ---------------------------------------------------------------------------

namespace detail {
inline void require_total(const WorkflowSchema& schema, const Plan& plan) {
  if (plan.size() != schema.steps().size())
    throw ContractViolation("plan domain does not equal the step set");
  for (StepId s : schema.steps())
    if (!plan.contains(s))
      throw ContractViolation("plan domain does not equal the step set");
}
}  // namespace detail

/// Every assigned user is authorized for its step.
inline bool is_authorized(const WorkflowSchema& schema, const Plan& plan) {
  detail::require_total(schema, plan);
  for (auto [s, u] : plan.entries())
    if (!schema.authorizes(s, u)) return false;
  return true;
}

/// Some pair (s1, s2) in scope1 x scope2 has (plan(s1), plan(s2)) in the
/// relation.
inline bool satisfies_constraint(const Plan& plan, const Constraint& c) {
  for (StepId s : c.scope1())
    if (!plan.contains(s))
      throw ContractViolation("constraint scope outside plan domain");
  for (StepId s : c.scope2())
    if (!plan.contains(s))
      throw ContractViolation("constraint scope outside plan domain");
  for (StepId a : c.scope1()) {
    for (StepId b : c.scope2()) {
      if (c.relation().contains(plan.at(a), plan.at(b))) return true;
    }
  }
  return false;
}

/// Authorized and satisfies every constraint.
inline bool is_valid(const WorkflowSchema& schema, const Plan& plan) {
  if (!is_authorized(schema, plan)) return false;
  for (const Constraint& c : schema.constraints())
    if (!satisfies_constraint(plan, c)) return false;
  return true;
}

}  // namespace wsp

template <>
struct std::hash<wsp::StepId> {
  std::size_t operator()(wsp::StepId s) const noexcept {
    return std::hash<std::uint32_t>{}(s.value);
  }
};

template <>
struct std::hash<wsp::UserId> {
  std::size_t operator()(wsp::UserId u) const noexcept {
    return std::hash<std::uint32_t>{}(u.value);
  }
};
