#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "test_util.hpp"
#include "wsp/wsp.hpp"

using namespace wsp;

TEST_CASE("expression evaluation") {
  tu::Fixture f = tu::purchase_order(2);
  auto plan = f.plan({{"s1", "u1"}, {"s2", "u2"}, {"s3", "u1"},
                      {"s4", "u2"}, {"s5", "u2"}, {"s6", "u1"}});

  SECTION("negation of equality") {
    auto e = ConstraintExpr::negation(ConstraintExpr::primitive(
        UserRelation::diagonal(), f.s("s1"), f.s("s2")));
    CHECK(eval(plan, e));  // distinct users violate (=)
  }

  SECTION("conjunction of a singleton clause and a literal") {
    std::vector<ConstraintExpr> clause;
    clause.push_back(ConstraintExpr::primitive(UserRelation::not_diagonal(),
                                               f.s("s1"), f.s("s2")));
    std::vector<ConstraintExpr> both;
    both.push_back(ConstraintExpr::disjunction(std::move(clause)));
    both.push_back(ConstraintExpr::primitive(UserRelation::diagonal(),
                                             f.s("s1"), f.s("s3")));
    CHECK(eval(plan, ConstraintExpr::conjunction(std::move(both))));
  }

  SECTION("empty conjunction is TRUE, empty disjunction is FALSE") {
    CHECK(eval(plan, ConstraintExpr::conjunction({})));
    CHECK_FALSE(eval(plan, ConstraintExpr::disjunction({})));
  }

  SECTION("leaf outside the plan domain is a contract violation") {
    auto partial = f.plan({{"s1", "u1"}});
    auto e = ConstraintExpr::primitive(UserRelation::diagonal(), f.s("s1"),
                                       f.s("s2"));
    CHECK_THROWS_AS(eval(partial, e), ContractViolation);
  }
}

TEST_CASE("a scope-product disjunction matches satisfies_constraint") {
  std::mt19937 rng(7101);
  for (int round = 0; round < 200; ++round) {
    auto schema = tu::random_schema(rng);
    auto plan = tu::random_plan(rng, schema);
    for (const Constraint& c : schema.constraints()) {
      std::vector<ConstraintExpr> lits;
      for (StepId a : c.scope1())
        for (StepId b : c.scope2())
          lits.push_back(ConstraintExpr::primitive(c.relation(), a, b));
      auto disj = ConstraintExpr::disjunction(std::move(lits));
      CHECK(eval(plan, disj) == satisfies_constraint(plan, c));
    }
  }
}

TEST_CASE("cnf conversion") {
  tu::Fixture f;
  f.step("a");
  f.step("b");
  f.step("c");
  f.user("u1");
  f.user("u2");
  f.full_auth();

  SECTION("type 1 passes through as one singleton clause") {
    auto cnf = to_cnf({Constraint(UserRelation::not_diagonal(), {f.s("a")},
                                  {f.s("b")})});
    REQUIRE(cnf.clauses.size() == 1);
    CHECK(cnf.clauses[0].literals.size() == 1);
    CHECK(cnf.clauses[0].source_constraint == 0);
  }

  SECTION("type 2 clause lists the scope product") {
    auto cnf = to_cnf({Constraint(UserRelation::not_diagonal(),
                                  {f.s("a"), f.s("b")}, {f.s("c")})});
    REQUIRE(cnf.clauses.size() == 1);
    REQUIRE(cnf.clauses[0].literals.size() == 2);
    CHECK(cnf.clauses[0].literals[0].s1 == f.s("a"));
    CHECK(cnf.clauses[0].literals[0].s2 == f.s("c"));
    CHECK(cnf.clauses[0].literals[1].s1 == f.s("b"));
    CHECK(cnf.clauses[0].literals[1].s2 == f.s("c"));
  }

  SECTION("the running example yields five singleton clauses") {
    auto schema = tu::purchase_order(2).schema();
    auto cnf = to_cnf(schema.constraints());
    REQUIRE(cnf.clauses.size() == 5);
    for (const auto& clause : cnf.clauses)
      CHECK(clause.literals.size() == 1);
    CHECK(cnf.simple_count() == 1);
  }

  SECTION("cnf evaluation matches the constraint set") {
    std::mt19937 rng(7102);
    for (int round = 0; round < 200; ++round) {
      auto schema = tu::random_schema(rng);
      auto plan = tu::random_plan(rng, schema);
      bool direct = true;
      for (const Constraint& c : schema.constraints())
        direct = direct && satisfies_constraint(plan, c);
      CHECK(eval(plan, to_cnf(schema.constraints())) == direct);
    }
  }
}

TEST_CASE("simple expression enumeration") {
  tu::Fixture f;
  for (const char* n : {"a", "b", "c", "d"}) f.step(n);
  f.user("u1");
  f.full_auth();

  SECTION("five singleton clauses give exactly one simple expression") {
    auto schema = tu::purchase_order(2).schema();
    auto stream = enumerate_simple_expressions(to_cnf(schema.constraints()));
    int count = 0;
    while (stream.next()) ++count;
    CHECK(count == 1);
  }

  SECTION("clause sizes 2 and 3 give six expressions, odometer order") {
    auto cnf = to_cnf({Constraint(UserRelation::not_diagonal(),
                                  {f.s("a"), f.s("b")}, {f.s("c")}),
                       Constraint(UserRelation::not_diagonal(),
                                  {f.s("a"), f.s("b"), f.s("c")}, {f.s("d")})});
    CHECK(cnf.simple_count() == 6);
    auto stream = enumerate_simple_expressions(cnf);
    std::vector<SimpleExpression> all;
    while (auto e = stream.next()) all.push_back(std::move(*e));
    REQUIRE(all.size() == 6);
    // Rightmost clause varies fastest.
    CHECK(all[0].literals[0].s1 == f.s("a"));
    CHECK(all[0].literals[1].s1 == f.s("a"));
    CHECK(all[1].literals[0].s1 == f.s("a"));
    CHECK(all[1].literals[1].s1 == f.s("b"));
    CHECK(all[2].literals[0].s1 == f.s("a"));
    CHECK(all[2].literals[1].s1 == f.s("c"));
    CHECK(all[3].literals[0].s1 == f.s("b"));
    // No duplicates.
    for (std::size_t i = 0; i < all.size(); ++i)
      for (std::size_t j = i + 1; j < all.size(); ++j)
        CHECK_FALSE(all[i].literals == all[j].literals);
  }

  SECTION("a (ne, S, S) scope with three steps gives nine expressions") {
    auto cnf = to_cnf({Constraint(UserRelation::not_diagonal(),
                                  {f.s("a"), f.s("b"), f.s("c")},
                                  {f.s("a"), f.s("b"), f.s("c")})});
    auto stream = enumerate_simple_expressions(cnf);
    int count = 0;
    while (stream.next()) ++count;
    CHECK(count == 9);
  }

  SECTION("exceeding the cap raises a resource error naming the product") {
    auto cnf = to_cnf({Constraint(UserRelation::not_diagonal(),
                                  {f.s("a"), f.s("b"), f.s("c")},
                                  {f.s("a"), f.s("b"), f.s("c")})});
    Caps caps;
    caps.max_simple_expressions = 8;
    CHECK_THROWS_WITH(enumerate_simple_expressions(cnf, caps),
                      Catch::Matchers::ContainsSubstring("9"));
  }

  SECTION("index-range slices partition the stream") {
    auto cnf = to_cnf({Constraint(UserRelation::not_diagonal(),
                                  {f.s("a"), f.s("b"), f.s("c")},
                                  {f.s("a"), f.s("b"), f.s("c")})});
    SimpleExpressionStream left(cnf, 0, 4), right(cnf, 4, 9);
    int count = 0;
    while (left.next()) ++count;
    while (right.next()) ++count;
    CHECK(count == 9);
  }
}

TEST_CASE("simple expressions relate to the cnf in both directions") {
  std::mt19937 rng(7103);
  for (int round = 0; round < 120; ++round) {
    auto schema = tu::random_schema(rng);
    auto cnf = to_cnf(schema.constraints());
    if (cnf.simple_count() > 512) continue;
    auto plan = tu::random_plan(rng, schema);
    const bool whole = eval(plan, cnf);

    bool any_simple = false;
    auto stream = enumerate_simple_expressions(cnf);
    while (auto simple = stream.next()) {
      bool all = true;
      for (const auto& lit : simple->literals)
        all = all &&
              lit.relation.contains(plan.at(lit.s1), plan.at(lit.s2));
      if (all) {
        any_simple = true;
        break;
      }
    }
    // A satisfied simple expression implies the cnf, and a satisfied cnf
    // has some satisfied simple expression.
    CHECK(any_simple == whole);
  }
}

TEST_CASE("negation to equality form") {
  tu::Fixture f = tu::purchase_order(2);

  SECTION("a single != constraint becomes NOT(=)") {
    auto e = negate_to_equality_form({Constraint(UserRelation::not_diagonal(),
                                                 {f.s("s1")}, {f.s("s2")})});
    REQUIRE(e.kind() == ConstraintExpr::Kind::Not);
    REQUIRE(e.child().kind() == ConstraintExpr::Kind::Primitive);
    CHECK(e.child().literal().relation ==  UserRelation::diagonal());
  }

  SECTION("the running example yields one positive and four negated leaves") {
    auto schema = f.schema();
    auto e = negate_to_equality_form(schema.constraints());
    REQUIRE(e.kind() == ConstraintExpr::Kind::And);
    REQUIRE(e.children().size() == 5);
    int positive = 0, negated = 0;
    for (const auto& child : e.children()) {
      if (child.kind() == ConstraintExpr::Kind::Primitive) ++positive;
      if (child.kind() == ConstraintExpr::Kind::Not) ++negated;
    }
    CHECK(positive == 1);
    CHECK(negated == 4);
  }

  SECTION("empty input is the vacuous TRUE") {
    auto e = negate_to_equality_form({});
    REQUIRE(e.kind() == ConstraintExpr::Kind::And);
    CHECK(e.children().empty());
    CHECK(eval(f.plan({{"s1", "u1"}, {"s2", "u1"}, {"s3", "u1"},
                       {"s4", "u1"}, {"s5", "u1"}, {"s6", "u1"}}),
               e));
  }

  SECTION("eval-equivalent to the source constraints on random plans") {
    std::mt19937 rng(7104);
    for (int round = 0; round < 150; ++round) {
      auto schema = tu::random_schema(rng);
      auto e = negate_to_equality_form(schema.constraints());
      auto plan = tu::random_plan(rng, schema);
      bool direct = true;
      for (const Constraint& c : schema.constraints())
        direct = direct && satisfies_constraint(plan, c);
      CHECK(eval(plan, e) == direct);
    }
  }

  SECTION("explicit relations are unsupported") {
    auto rel = UserRelation::explicit_pairs({{UserId{0}, UserId{1}}});
    CHECK_THROWS_AS(
        negate_to_equality_form({Constraint(rel, {f.s("s1")}, {f.s("s2")})}),
        UnsupportedRelationError);
  }
}
