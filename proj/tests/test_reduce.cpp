#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <set>

#include "test_util.hpp"
#include "wsp/wsp.hpp"

using namespace wsp;

namespace {

// Independent check path: decide the merged WSP1(!=) instance by the naive
// search and pull any witness back through the block map.
SolveResult solve_via_reduction(const WorkflowSchema& schema) {
  auto merged = reduce_eq(schema);
  if (!merged) return SolveResult{};
  SolveResult inner = solve_naive(merged->schema);
  if (!inner.sat()) return SolveResult{};
  SolveResult out;
  out.status = SolveStatus::Sat;
  out.witness = merged->lift(*inner.witness);
  return out;
}

std::set<std::set<std::string>> block_names(const WorkflowSchema& original,
                                            const MergedSchema& merged) {
  std::set<std::set<std::string>> out;
  for (const auto& [superstep, members] : merged.members) {
    std::set<std::string> block;
    for (StepId s : members) block.insert(original.step_names().name(s.value));
    out.insert(std::move(block));
  }
  return out;
}

}  // namespace

TEST_CASE("the running example merges s1 and s3") {
  auto f = tu::purchase_order(2);
  auto schema = f.schema();
  auto merged = reduce_eq(schema);
  REQUIRE(merged.has_value());

  CHECK(block_names(schema, *merged) ==
        std::set<std::set<std::string>>{
            {"s1", "s3"}, {"s2"}, {"s4"}, {"s5"}, {"s6"}});

  // Four (!=) constraints survive: the two incident to the merged block
  // collapse onto it.
  REQUIRE(merged->schema.constraints().size() == 4);
  std::set<std::set<std::string>> pairs;
  for (const Constraint& c : merged->schema.constraints()) {
    CHECK(c.relation().kind() == UserRelation::Kind::NotDiagonal);
    pairs.insert({merged->schema.step_names().name(c.s1().value),
                  merged->schema.step_names().name(c.s2().value)});
  }
  CHECK(pairs == std::set<std::set<std::string>>{{"blk:s1", "blk:s2"},
                                                 {"blk:s1", "blk:s4"},
                                                 {"blk:s1", "blk:s5"},
                                                 {"blk:s4", "blk:s6"}});
}

TEST_CASE("an explicit contradiction is unsatisfiable without search") {
  tu::Fixture f;
  f.step("a");
  f.step("b");
  f.user("u1");
  f.user("u2");
  f.full_auth();
  f.eq("a", "b").ne("a", "b");
  CHECK_FALSE(reduce_eq(f.schema()).has_value());
}

TEST_CASE("no equality constraints yield the identity partition") {
  tu::Fixture f;
  f.step("a");
  f.step("b");
  f.user("u1");
  f.full_auth();
  f.ne("a", "b");
  auto merged = reduce_eq(f.schema());
  REQUIRE(merged.has_value());
  CHECK(merged->schema.steps().size() == 2);
  CHECK(merged->schema.step_names().name(0) == "blk:a");
  CHECK(merged->schema.step_names().name(1) == "blk:b");
  CHECK(merged->members_of(StepId{0}) == std::vector<StepId>{f.s("a")});
}

TEST_CASE("superstep authorization is the member intersection") {
  tu::Fixture f;
  f.step("a");
  f.step("b");
  f.user("u1");
  f.user("u2");
  f.user("u3");
  f.authorize("a", "u1").authorize("a", "u2");
  f.authorize("b", "u2").authorize("b", "u3");
  f.eq("a", "b");
  auto merged = reduce_eq(f.schema());
  REQUIRE(merged.has_value());
  CHECK(merged->schema.authorized(StepId{0}) ==
        std::vector<UserId>{f.u("u2")});

  SECTION("an empty intersection is immediately unsatisfiable") {
    tu::Fixture g;
    g.step("a");
    g.step("b");
    g.user("u1");
    g.user("u2");
    g.authorize("a", "u1").authorize("b", "u2");
    g.eq("a", "b");
    CHECK_FALSE(reduce_eq(g.schema()).has_value());
  }
}

TEST_CASE("reduce_eq rejects non-type-1 and explicit-relation input") {
  tu::Fixture f;
  f.step("a");
  f.step("b");
  f.step("c");
  f.user("u1");
  f.full_auth();
  auto schema = f.schema();
  CHECK_THROWS_AS(
      reduce_eq(schema.with_constraints({Constraint(
          UserRelation::not_diagonal(), {f.s("a"), f.s("b")}, {f.s("c")})})),
      ContractViolation);
  CHECK_THROWS_AS(
      reduce_eq(schema.with_constraints(
          {Constraint(UserRelation::explicit_pairs({{UserId{0}, UserId{0}}}),
                      {f.s("a")}, {f.s("b")})})),
      ContractViolation);
}

TEST_CASE("rich-step pruning") {
  SECTION("all steps free when everyone can do everything") {
    tu::Fixture f;
    for (const char* n : {"a", "b", "c"}) f.step(n);
    for (int i = 1; i <= 10; ++i) f.user("u" + std::to_string(i));
    f.full_auth();
    f.ne("a", "b").ne("b", "c");
    auto merged = reduce_eq(f.schema());
    REQUIRE(merged.has_value());
    auto pruned = prune_rich_steps(*merged);
    CHECK(pruned.free_steps.size() == 3);
    CHECK(pruned.core.schema.steps().empty());
    CHECK(pruned.core.schema.constraints().empty());
  }

  SECTION("threshold k separates poor steps from rich ones") {
    tu::Fixture f;
    for (const char* n : {"a", "b", "c"}) f.step(n);
    for (int i = 1; i <= 5; ++i) f.user("u" + std::to_string(i));
    f.authorize("a", "u1").authorize("a", "u2");              // 2 < 3: core
    for (int i = 1; i <= 5; ++i) {
      f.authorize("b", "u" + std::to_string(i));              // 5 >= 3: free
      f.authorize("c", "u" + std::to_string(i));
    }
    f.ne("a", "b");
    auto merged = reduce_eq(f.schema());
    REQUIRE(merged.has_value());
    auto pruned = prune_rich_steps(*merged);
    CHECK(pruned.core.schema.steps().size() == 1);
    CHECK(pruned.free_steps.size() == 2);
    // The core/free bridge constraint is retained for the greedy pass.
    CHECK(pruned.core_free_constraints.size() == 1);
    CHECK(pruned.core.schema.constraints().empty());
  }

  SECTION("merged running example with five fully-authorized users is free") {
    auto f = tu::purchase_order(5);
    auto merged = reduce_eq(f.schema());
    REQUIRE(merged.has_value());
    REQUIRE(merged->schema.steps().size() == 5);  // k = 5 supersteps
    auto pruned = prune_rich_steps(*merged);
    CHECK(pruned.free_steps.size() == 5);
    CHECK(solve_fpt(f.schema()).sat());
  }
}

TEST_CASE("reduction preserves satisfiability on random instances") {
  std::mt19937 rng(7201);
  int sat_seen = 0, unsat_seen = 0;
  for (int round = 0; round < 400; ++round) {
    auto schema = tu::random_wsp1(rng);
    auto oracle = solve_naive(schema);
    auto reduced = solve_via_reduction(schema);
    REQUIRE(oracle.sat() == reduced.sat());
    if (oracle.sat()) {
      ++sat_seen;
      // Lifted witnesses are valid for the original schema.
      CHECK(is_valid(schema, *reduced.witness));
    } else {
      ++unsat_seen;
    }
  }
  CHECK(sat_seen > 0);
  CHECK(unsat_seen > 0);
}

TEST_CASE("any valid merged plan lifts to a valid original plan and back") {
  std::mt19937 rng(7202);
  for (int round = 0; round < 200; ++round) {
    auto schema = tu::random_wsp1(rng);
    auto merged = reduce_eq(schema);
    if (!merged) continue;

    // Forward direction: lift every valid merged plan.
    auto inner = solve_naive(merged->schema);
    if (inner.sat()) CHECK(is_valid(schema, merged->lift(*inner.witness)));

    // Reverse direction: a valid original plan restricts to a valid merged
    // plan (each block is constant on a valid plan).
    auto direct = solve_naive(schema);
    if (direct.sat()) {
      std::vector<std::pair<StepId, UserId>> entries;
      for (const auto& [superstep, members] : merged->members)
        entries.emplace_back(superstep, direct.witness->at(members.front()));
      CHECK(is_valid(merged->schema, Plan(std::move(entries))));
    }
  }
}

TEST_CASE("pruning preserves satisfiability of the merged instance") {
  std::mt19937 rng(7203);
  for (int round = 0; round < 300; ++round) {
    auto schema = tu::random_wsp1(rng);
    auto merged = reduce_eq(schema);
    if (!merged) continue;
    auto pruned = prune_rich_steps(*merged);
    const bool full = solve_naive(merged->schema).sat();
    const bool core = solve_naive(pruned.core.schema).sat();
    CHECK(full == core);
  }
}
