#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "test_util.hpp"
#include "wsp/wsp.hpp"

using namespace wsp;

TEST_CASE("authorization checks") {
  auto f = tu::purchase_order(2);
  auto schema = f.schema();

  SECTION("fully authorized users accept any total plan") {
    auto plan = f.plan({{"s1", "u1"}, {"s2", "u2"}, {"s3", "u1"},
                        {"s4", "u2"}, {"s5", "u2"}, {"s6", "u1"}});
    CHECK(is_authorized(schema, plan));
  }

  SECTION("a single missing pair fails") {
    tu::Fixture g;
    g.step("s1");
    g.user("u1");
    g.user("u2");
    g.authorize("s1", "u1");
    auto s = g.schema();
    CHECK_FALSE(is_authorized(s, g.plan({{"s1", "u2"}})));
    CHECK(is_authorized(s, g.plan({{"s1", "u1"}})));
  }

  SECTION("split authorization") {
    tu::Fixture g = tu::purchase_order(2);
    g.auth.clear();
    for (const char* st : {"s1", "s3", "s6"}) g.authorize(st, "u1");
    for (const char* st : {"s2", "s4", "s5"}) g.authorize(st, "u2");
    auto s = g.schema();
    auto plan = g.plan({{"s1", "u1"}, {"s3", "u1"}, {"s6", "u1"},
                        {"s2", "u2"}, {"s4", "u2"}, {"s5", "u2"}});
    CHECK(is_authorized(s, plan));
  }

  SECTION("domain mismatch is a contract violation") {
    CHECK_THROWS_AS(is_authorized(schema, f.plan({{"s1", "u1"}})),
                    ContractViolation);
  }
}

TEST_CASE("constraint satisfaction") {
  tu::Fixture f = tu::purchase_order(2);
  auto plan = f.plan({{"s1", "u1"}, {"s2", "u2"}, {"s3", "u1"},
                      {"s4", "u2"}, {"s5", "u1"}, {"s6", "u1"}});

  SECTION("type 1 not-equal") {
    Constraint c(UserRelation::not_diagonal(), {f.s("s1")}, {f.s("s2")});
    CHECK(satisfies_constraint(plan, c));
  }

  SECTION("same user across a (ne, S', S') scope violates it") {
    Constraint c(UserRelation::not_diagonal(), {f.s("s3"), f.s("s5")},
                 {f.s("s3"), f.s("s5")});
    CHECK_FALSE(satisfies_constraint(plan, c));  // s3 and s5 both map to u1
  }

  SECTION("type 2 equality with a matching pair") {
    Constraint c(UserRelation::diagonal(), {f.s("s1")},
                 {f.s("s2"), f.s("s3")});
    CHECK(satisfies_constraint(plan, c));  // s1 = s3 = u1
  }

  SECTION("scope outside the plan domain is a contract violation") {
    auto partial = f.plan({{"s1", "u1"}});
    Constraint c(UserRelation::not_diagonal(), {f.s("s1")}, {f.s("s2")});
    CHECK_THROWS_AS(satisfies_constraint(partial, c), ContractViolation);
  }
}

TEST_CASE("plan validity") {
  auto f = tu::purchase_order(2);
  auto schema = f.schema();

  SECTION("hand-built valid plan") {
    auto plan = f.plan({{"s1", "u1"}, {"s3", "u1"}, {"s6", "u1"},
                        {"s2", "u2"}, {"s4", "u2"}, {"s5", "u2"}});
    CHECK(is_valid(schema, plan));
  }

  SECTION("constant plan violates every separation constraint") {
    auto plan = f.plan({{"s1", "u1"}, {"s2", "u1"}, {"s3", "u1"},
                        {"s4", "u1"}, {"s5", "u1"}, {"s6", "u1"}});
    CHECK_FALSE(is_valid(schema, plan));
  }

  SECTION("empty constraint list") {
    auto plain = schema.with_constraints({});
    auto plan = f.plan({{"s1", "u1"}, {"s2", "u1"}, {"s3", "u1"},
                        {"s4", "u1"}, {"s5", "u1"}, {"s6", "u1"}});
    CHECK(is_valid(plain, plan));
  }
}

TEST_CASE("type 3 satisfaction equals the disjunction of type 1 checks") {
  std::mt19937 rng(7001);
  for (int round = 0; round < 200; ++round) {
    auto schema = tu::random_schema(rng);
    auto plan = tu::random_plan(rng, schema);
    for (const Constraint& c : schema.constraints()) {
      bool any = false;
      for (StepId a : c.scope1())
        for (StepId b : c.scope2())
          any = any ||
                satisfies_constraint(plan, Constraint(c.relation(), {a}, {b}));
      CHECK(any == satisfies_constraint(plan, c));
    }
  }
}

TEST_CASE("symmetric relations allow swapped scopes") {
  std::mt19937 rng(7002);
  for (int round = 0; round < 100; ++round) {
    auto schema = tu::random_schema(rng);
    auto plan = tu::random_plan(rng, schema);
    for (const Constraint& c : schema.constraints()) {
      REQUIRE(c.relation().is_symmetric());  // = and != only
      Constraint swapped(c.relation(), c.scope2(), c.scope1());
      CHECK(satisfies_constraint(plan, c) ==
            satisfies_constraint(plan, swapped));
    }
  }
}

TEST_CASE("validity is monotone in the constraint list") {
  std::mt19937 rng(7003);
  for (int round = 0; round < 100; ++round) {
    auto schema = tu::random_schema(rng);
    if (schema.constraints().empty()) continue;
    auto plan = tu::random_plan(rng, schema);
    auto shorter = schema.with_constraints([&] {
      auto list = schema.constraints();
      list.pop_back();
      return list;
    }());
    // Adding a constraint never turns an invalid plan valid.
    if (!is_valid(shorter, plan)) CHECK_FALSE(is_valid(schema, plan));
  }
}

TEST_CASE("user relation algebra") {
  SECTION("complement swaps the built-in kinds") {
    CHECK(UserRelation::diagonal().complemented(3) ==
          UserRelation::not_diagonal());
    CHECK(UserRelation::not_diagonal().complemented(3) ==
          UserRelation::diagonal());
  }

  SECTION("explicit complement is materialized over U x U") {
    auto rel = UserRelation::explicit_pairs({{UserId{0}, UserId{1}}});
    auto comp = rel.complemented(2);
    CHECK(comp.kind() == UserRelation::Kind::Explicit);
    CHECK(comp.pairs().size() == 3);
    CHECK_FALSE(comp.contains(UserId{0}, UserId{1}));
    CHECK(comp.contains(UserId{1}, UserId{0}));
    CHECK(comp.complemented(2) == rel);
  }

  SECTION("transpose swaps explicit pairs") {
    auto rel = UserRelation::explicit_pairs({{UserId{0}, UserId{1}},
                                             {UserId{2}, UserId{2}}});
    auto t = rel.transposed();
    CHECK(t.contains(UserId{1}, UserId{0}));
    CHECK(t.contains(UserId{2}, UserId{2}));
    CHECK_FALSE(t.contains(UserId{0}, UserId{1}));
    CHECK(t.transposed() == rel);
  }
}

TEST_CASE("step dag order queries") {
  auto f = tu::purchase_order(2);
  auto dag = f.schema().dag();
  CHECK(dag.lt(f.s("s1"), f.s("s6")));
  CHECK(dag.leq(f.s("s2"), f.s("s5")));
  CHECK(dag.incomparable(f.s("s3"), f.s("s4")));
  CHECK(dag.incomparable(f.s("s4"), f.s("s5")));
  CHECK_FALSE(dag.leq(f.s("s6"), f.s("s1")));

  SECTION("cycles are rejected") {
    CHECK_THROWS_AS(StepDag({StepId{0}, StepId{1}},
                            {{StepId{0}, StepId{1}}, {StepId{1}, StepId{0}}}),
                    ValidationError);
  }
}

TEST_CASE("schema validation") {
  SECTION("a step with no authorized user is rejected") {
    tu::Fixture f;
    f.step("a");
    f.step("b");
    f.user("u1");
    f.authorize("a", "u1");
    CHECK_THROWS_AS(f.schema(), ValidationError);
  }

  SECTION("constraint scope outside the step set is rejected") {
    tu::Fixture f;
    f.step("a");
    f.user("u1");
    f.authorize("a", "u1");
    auto schema = f.schema();
    CHECK_THROWS_AS(
        schema.with_constraints({Constraint(UserRelation::not_diagonal(),
                                            {StepId{5}}, {StepId{0}})}),
        ValidationError);
  }

  SECTION("type 2 normalization drops a redundant (=, s, S') with s in S'") {
    tu::Fixture f;
    f.step("a");
    f.step("b");
    f.step("c");
    f.user("u1");
    f.full_auth();
    f.constrain(UserRelation::diagonal(), {"a"}, {"a", "b"});
    auto schema = f.schema();
    CHECK(schema.constraints().empty());
  }

  SECTION("type 2 normalization trims s out of (!=, s, S')") {
    tu::Fixture f;
    f.step("a");
    f.step("b");
    f.step("c");
    f.user("u1");
    f.user("u2");
    f.full_auth();
    f.constrain(UserRelation::not_diagonal(), {"a"}, {"a", "b", "c"});
    auto schema = f.schema();
    REQUIRE(schema.constraints().size() == 1);
    const auto& c = schema.constraints()[0];
    CHECK(c.scope2() == std::vector<StepId>{f.s("b"), f.s("c")});
  }
}
