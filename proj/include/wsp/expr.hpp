#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "wsp/core.hpp"
#include "wsp/errors.hpp"
#include "wsp/options.hpp"

namespace wsp {

// ---------------------------------------------------------------------------
// Constraint expressions: and/or/not trees over primitive (rho, s1, s2)
// literals.
// ---------------------------------------------------------------------------

struct PrimitiveConstraint {
  UserRelation relation;
  StepId s1;
  StepId s2;

  friend bool operator==(const PrimitiveConstraint& a,
                         const PrimitiveConstraint& b) {
    return a.relation == b.relation && a.s1 == b.s1 && a.s2 == b.s2;
  }
};

class ConstraintExpr {
 public:
  enum class Kind { Primitive, And, Or, Not };

  static ConstraintExpr primitive(UserRelation rel, StepId a, StepId b) {
    ConstraintExpr e(Kind::Primitive);
    e.prim_ = PrimitiveConstraint{std::move(rel), a, b};
    return e;
  }

  /// Empty conjunction is the canonical TRUE.
  static ConstraintExpr conjunction(std::vector<ConstraintExpr> children) {
    ConstraintExpr e(Kind::And);
    e.children_ = std::move(children);
    return e;
  }

  /// Empty disjunction is the canonical FALSE.
  static ConstraintExpr disjunction(std::vector<ConstraintExpr> children) {
    ConstraintExpr e(Kind::Or);
    e.children_ = std::move(children);
    return e;
  }

  static ConstraintExpr negation(ConstraintExpr child) {
    ConstraintExpr e(Kind::Not);
    e.children_.push_back(std::move(child));
    return e;
  }

  Kind kind() const noexcept { return kind_; }

  const PrimitiveConstraint& literal() const {
    if (kind_ != Kind::Primitive)
      throw ContractViolation("literal(): not a primitive expression");
    return *prim_;
  }

  const std::vector<ConstraintExpr>& children() const noexcept {
    return children_;
  }

  const ConstraintExpr& child() const {
    if (kind_ != Kind::Not) throw ContractViolation("child(): not a negation");
    return children_.front();
  }

 private:
  explicit ConstraintExpr(Kind kind) : kind_(kind) {}

  Kind kind_;
  std::optional<PrimitiveConstraint> prim_;
  std::vector<ConstraintExpr> children_;
};

/// Evaluate with a caller-supplied valuation of the primitive literals.
/// Used both for plan evaluation and for the partition templates of the
/// negative-expression solver.
template <typename LiteralEval>
bool eval_with(const ConstraintExpr& e, const LiteralEval& literal_true) {
  switch (e.kind()) {
    case ConstraintExpr::Kind::Primitive:
      return literal_true(e.literal());
    case ConstraintExpr::Kind::And:
      for (const auto& c : e.children())
        if (!eval_with(c, literal_true)) return false;
      return true;
    case ConstraintExpr::Kind::Or:
      for (const auto& c : e.children())
        if (eval_with(c, literal_true)) return true;
      return false;
    case ConstraintExpr::Kind::Not:
      return !eval_with(e.child(), literal_true);
  }
  return false;
}

/// Plan evaluation: a primitive (rho, s1, s2) holds when
/// (plan(s1), plan(s2)) is in rho.
inline bool eval(const Plan& plan, const ConstraintExpr& e) {
  return eval_with(e, [&](const PrimitiveConstraint& p) {
    if (!plan.contains(p.s1) || !plan.contains(p.s2))
      throw ContractViolation("expression leaf outside plan domain");
    return p.relation.contains(plan.at(p.s1), plan.at(p.s2));
  });
}

// ---------------------------------------------------------------------------
// Conjunctive normal form
// ---------------------------------------------------------------------------

/// One clause per source constraint: the disjunction of all |S1| * |S2|
/// primitive literals. All literals are positive.
struct CnfClause {
  std::vector<PrimitiveConstraint> literals;
  std::size_t source_constraint = 0;  // index into the schema's list
};

struct CnfExpression {
  std::vector<CnfClause> clauses;

  /// Product of the clause sizes, saturating at uint64 max.
  std::uint64_t simple_count() const noexcept {
    std::uint64_t product = 1;
    for (const auto& c : clauses) {
      const std::uint64_t size = c.literals.size();
      if (size != 0 && product > UINT64_MAX / size) return UINT64_MAX;
      product *= size;
    }
    return product;
  }
};

inline ConstraintExpr to_expr(const CnfExpression& cnf) {
  std::vector<ConstraintExpr> clauses;
  clauses.reserve(cnf.clauses.size());
  for (const auto& clause : cnf.clauses) {
    std::vector<ConstraintExpr> lits;
    lits.reserve(clause.literals.size());
    for (const auto& lit : clause.literals)
      lits.push_back(ConstraintExpr::primitive(lit.relation, lit.s1, lit.s2));
    clauses.push_back(ConstraintExpr::disjunction(std::move(lits)));
  }
  return ConstraintExpr::conjunction(std::move(clauses));
}

inline bool eval(const Plan& plan, const CnfExpression& cnf) {
  for (const auto& clause : cnf.clauses) {
    bool any = false;
    for (const auto& lit : clause.literals) {
      if (lit.relation.contains(plan.at(lit.s1), plan.at(lit.s2))) {
        any = true;
        break;
      }
    }
    if (!any) return false;
  }
  return true;
}

/// Rewrite a constraint set as a CNF constraint expression. Expects the
/// normalized constraint list a WorkflowSchema carries.
inline CnfExpression to_cnf(const std::vector<Constraint>& constraints) {
  CnfExpression cnf;
  cnf.clauses.reserve(constraints.size());
  for (std::size_t i = 0; i < constraints.size(); ++i) {
    const Constraint& c = constraints[i];
    CnfClause clause;
    clause.source_constraint = i;
    clause.literals.reserve(c.scope1().size() * c.scope2().size());
    for (StepId a : c.scope1())
      for (StepId b : c.scope2())
        clause.literals.push_back(PrimitiveConstraint{c.relation(), a, b});
    cnf.clauses.push_back(std::move(clause));
  }
  return cnf;
}

// ---------------------------------------------------------------------------
// Simple constraint expressions: one literal chosen from each clause.
// ---------------------------------------------------------------------------

struct SimpleExpression {
  std::vector<PrimitiveConstraint> literals;  // literal i comes from clause i
};

/// The simple expression at a given odometer index; the rightmost clause
/// varies fastest.
inline SimpleExpression simple_expression_at(const CnfExpression& cnf,
                                             std::uint64_t index) {
  SimpleExpression out;
  out.literals.reserve(cnf.clauses.size());
  std::vector<std::size_t> digits(cnf.clauses.size(), 0);
  for (std::size_t i = cnf.clauses.size(); i-- > 0;) {
    const std::uint64_t size = cnf.clauses[i].literals.size();
    digits[i] = static_cast<std::size_t>(index % size);
    index /= size;
  }
  if (index != 0)
    throw ContractViolation("simple expression index out of range");
  for (std::size_t i = 0; i < cnf.clauses.size(); ++i)
    out.literals.push_back(cnf.clauses[i].literals[digits[i]]);
  return out;
}

/// Value-state iterator over a half-open odometer interval
/// [begin, end) of simple expressions. Owns its CNF, so disjoint intervals
/// can be consumed concurrently and streams may outlive their source.
class SimpleExpressionStream {
 public:
  SimpleExpressionStream(CnfExpression cnf, std::uint64_t begin,
                         std::uint64_t end)
      : cnf_(std::move(cnf)), next_(begin), end_(end) {
    for (const auto& clause : cnf_.clauses)
      if (clause.literals.empty())
        throw ContractViolation("empty clause in simple-expression stream");
  }

  explicit SimpleExpressionStream(CnfExpression cnf)
      : SimpleExpressionStream(std::move(cnf), 0, 0) {
    end_ = cnf_.simple_count();
  }

  std::optional<SimpleExpression> next() {
    if (next_ >= end_) return std::nullopt;
    return simple_expression_at(cnf_, next_++);
  }

  std::uint64_t remaining() const noexcept { return end_ - next_; }

 private:
  CnfExpression cnf_;
  std::uint64_t next_;
  std::uint64_t end_;
};

/// Stream over all simple expressions of `cnf`, checked against the cap.
/// The count is the product of the clause sizes.
inline SimpleExpressionStream enumerate_simple_expressions(
    CnfExpression cnf, const Caps& caps = {}) {
  const std::uint64_t count = cnf.simple_count();
  if (count > caps.max_simple_expressions) {
    std::string shown = count == UINT64_MAX ? std::string("more than 2^64 - 1")
                                            : std::to_string(count);
    throw ResourceLimitError("simple-expression count " + shown +
                             " exceeds the cap of " +
                             std::to_string(caps.max_simple_expressions));
  }
  return SimpleExpressionStream(std::move(cnf), 0, count);
}

// ---------------------------------------------------------------------------
// Negative constraint expressions
// ---------------------------------------------------------------------------

/// Encode a {=, !=} constraint set using only (=, s1, s2) primitives and
/// negation: each != literal becomes NOT(=). The result is eval-equivalent
/// to the conjunction of the input constraints on every plan. Empty input
/// yields the canonical TRUE (empty conjunction).
inline ConstraintExpr negate_to_equality_form(
    const std::vector<Constraint>& constraints) {
  std::vector<ConstraintExpr> conjuncts;
  conjuncts.reserve(constraints.size());
  for (const Constraint& c : constraints) {
    const auto kind = c.relation().kind();
    if (kind == UserRelation::Kind::Explicit)
      throw UnsupportedRelationError(
          "negate_to_equality_form supports only = and != relations");
    std::vector<ConstraintExpr> lits;
    lits.reserve(c.scope1().size() * c.scope2().size());
    for (StepId a : c.scope1()) {
      for (StepId b : c.scope2()) {
        auto eq = ConstraintExpr::primitive(UserRelation::diagonal(), a, b);
        if (kind == UserRelation::Kind::Diagonal)
          lits.push_back(std::move(eq));
        else
          lits.push_back(ConstraintExpr::negation(std::move(eq)));
      }
    }
    if (lits.size() == 1)
      conjuncts.push_back(std::move(lits.front()));
    else
      conjuncts.push_back(ConstraintExpr::disjunction(std::move(lits)));
  }
  if (conjuncts.size() == 1) return std::move(conjuncts.front());
  return ConstraintExpr::conjunction(std::move(conjuncts));
}

}  // namespace wsp
