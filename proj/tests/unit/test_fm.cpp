#include <clayer/error.hpp>
#include <clayer/fm.hpp>
#include <clayer/orderings.hpp>
#include <clayer/parser.hpp>
#include <cmath>
#include <doctest.h>
#include <functional>
#include <random>

#include "feasibility_oracle.hpp"
#include "random_systems.hpp"

using namespace clayer;

namespace {

ErrorKind error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error");
  return ErrorKind::invalid_argument;
}

}  // namespace

TEST_CASE("two-constraint chain") {
  const auto schema = testing::numbered_schema(2);
  const auto set = parse_constraints("x1 - x2 >= 0\nx2 - 5 > 0\n", schema);
  const auto report = check_satisfiable(set);
  CHECK(report.satisfiable);
  CHECK(report.per_rank_sizes == std::vector<std::size_t>{2, 1, 0});

  const auto layer = compile(set, VariableOrdering::natural(schema));
  REQUIRE(layer.rank_count() == 2);
  const RankTable& r1 = layer.rank(1);
  REQUIRE(r1.lower.size() == 1);
  CHECK(r1.upper.empty());
  CHECK(r1.lower[0].terms.empty());
  CHECK(r1.lower[0].offset == 5);
  CHECK(r1.lower[0].strict);
  const RankTable& r2 = layer.rank(2);
  REQUIRE(r2.lower.size() == 1);
  REQUIRE(r2.upper.size() == 1);
  CHECK(r2.upper[0].terms == std::vector<BoundTerm>{{1, 0, 1.0}});
  CHECK_FALSE(r2.upper[0].strict);
}

TEST_CASE("reduction matches the pairwise formula") {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> coef(-3, 3);
  std::uniform_int_distribution<int> pos(1, 3);
  for (int i = 0; i < 500; ++i) {
    const std::size_t j = rng() % 4;
    std::vector<Term> neg;
    std::vector<Term> plus;
    std::vector<double> wn(4);
    std::vector<double> wp(4);
    for (std::size_t k = 0; k < 4; ++k) {
      wn[k] = k == j ? -pos(rng) : coef(rng);
      wp[k] = k == j ? pos(rng) : coef(rng);
      neg.push_back({k, wn[k]});
      plus.push_back({k, wp[k]});
    }
    const double bn = coef(rng);
    const double bp = coef(rng);
    const bool sn = rng() % 2 == 0;
    const bool sp = rng() % 3 == 0;
    const auto r = reduce_pair(LinearConstraint(neg, bn, sn), LinearConstraint(plus, bp, sp), j);
    CHECK_FALSE(r.mentions(j));
    CHECK(r.strict() == (sn || sp));
    for (std::size_t k = 0; k < 4; ++k) {
      if (k == j) continue;
      CHECK(r.weight(k) == wn[k] * std::fabs(wp[j]) + wp[k] * std::fabs(wn[j]));
    }
    CHECK(r.bias() == bn * std::fabs(wp[j]) + bp * std::fabs(wn[j]));
  }
}

TEST_CASE("reduction rejects wrong signs") {
  const LinearConstraint a({{0, 1}}, 0, false);
  const LinearConstraint b({{0, 2}, {1, 1}}, 0, false);
  CHECK(error_of([&] { reduce_pair(a, b, 0); }) == ErrorKind::wrong_signs);
  CHECK(error_of([&] { reduce_pair(b, a, 1); }) == ErrorKind::wrong_signs);
}

TEST_CASE("partition by sign") {
  const auto schema = testing::numbered_schema(3);
  const auto set = parse_constraints("x1 >= 0\n-x1 + x2 >= 0\nx3 > 1\n2*x1 - x3 >= 4\n", schema);
  const auto p = partition(set, 0);
  CHECK(p.plus.size() == 2);
  CHECK(p.minus.size() == 1);
  CHECK(p.rest.size() == 1);
}

TEST_CASE("elimination prunes tautologies and duplicates") {
  const auto schema = testing::numbered_schema(2);
  // Pairs with x1 >= 0 are constants and drop out; x1 >= x2 pairs with the
  // three upper bounds, and 6 - 2*x2 is kept apart from 3 - x2 (no rescaling).
  const auto set = parse_constraints("x1 >= 0\nx1 <= 1\nx1 >= x2\n2*x1 <= 6\nx1 <= 3\n", schema);
  const auto out = eliminate(set, 0);
  for (const auto& c : out) CHECK_FALSE(c.mentions(0));
  CHECK(out.size() == 3);
}

TEST_CASE("unsatisfiable systems report a witness") {
  const auto schema = testing::numbered_schema(2);
  const auto set = parse_constraints("x1 > x2\nx2 > x1\n", schema);
  const auto report = check_satisfiable(set);
  CHECK_FALSE(report.satisfiable);
  REQUIRE(report.witness.has_value());
  CHECK(report.witness->is_constant());
  CHECK_FALSE(report.witness->constant_holds());
  try {
    compile(set, VariableOrdering::natural(schema));
    FAIL("expected UnsatisfiableError");
  } catch (const UnsatisfiableError& e) {
    CHECK_FALSE(e.report().satisfiable);
    CHECK(e.kind() == ErrorKind::unsatisfiable);
  }
  const auto boundary = parse_constraints("x1 >= x2\nx2 >= x1\n", schema);
  CHECK(check_satisfiable(boundary).satisfiable);
}

TEST_CASE("blow-up cap") {
  const auto schema = testing::numbered_schema(12);
  std::string text;
  for (int i = 2; i <= 12; ++i) {
    text += "x1 - x" + std::to_string(i) + " >= 0\n";
    text += "x" + std::to_string(i) + " - x1 + " + std::to_string(i) + " >= 0\n";
  }
  const auto set = parse_constraints(text, schema);
  CHECK(error_of([&] { eliminate(set, 0, 50); }) == ErrorKind::blowup_limit_exceeded);
  CHECK_NOTHROW(eliminate(set, 0, 1000));
  // The natural ordering removes x12 first, which stays small; putting x1 on
  // top makes it go first.
  CHECK_NOTHROW(compile(set, VariableOrdering::natural(schema), {50}));
  std::vector<std::size_t> columns;
  for (std::size_t k = 1; k < 12; ++k) columns.push_back(k);
  columns.push_back(0);
  CHECK(error_of([&] { compile(set, VariableOrdering(schema, columns), {50}); }) ==
        ErrorKind::blowup_limit_exceeded);
}

TEST_CASE("orderings are validated") {
  const FeatureSchema schema({{"a", FeatureKind::continuous},
                              {"g", FeatureKind::categorical},
                              {"b", FeatureKind::continuous}});
  CHECK(error_of([&] { VariableOrdering(schema, {0, 0}); }) == ErrorKind::invalid_ordering);
  CHECK(error_of([&] { VariableOrdering(schema, {1}); }) == ErrorKind::invalid_ordering);
  CHECK(error_of([&] { VariableOrdering(schema, {5}); }) == ErrorKind::invalid_ordering);
  const auto natural = VariableOrdering::natural(schema);
  CHECK(natural.columns() == std::vector<std::size_t>{0, 2});
  const std::vector<std::string> names{"b", "g", "a"};
  const auto named = VariableOrdering::from_names(schema, names);
  CHECK(named.columns() == std::vector<std::size_t>{2, 0});
  CHECK(named.rank(0) == 2);
  CHECK_FALSE(named.rank(1).has_value());

  const auto set = parse_constraints("a + b >= 0\n", schema);
  const VariableOrdering partial(schema, {0});
  CHECK(error_of([&] { partial.require_covers(set); }) == ErrorKind::invalid_ordering);
}

TEST_CASE("compiled bound expressions only look down the ordering") {
  std::mt19937_64 rng(21);
  testing::SystemShape shape;
  shape.max_vars = 6;
  shape.max_constraints = 9;
  for (int i = 0; i < 60; ++i) {
    const auto system = testing::random_satisfiable(rng, shape);
    const auto schema = testing::numbered_schema(system.dims);
    const auto set = testing::to_constraint_set(system, schema);
    const auto ordering = random_ordering(schema, rng());
    const auto layer = compile(set, ordering);
    for (Rank r = 1; r <= layer.rank_count(); ++r) {
      for (const auto* side : {&layer.rank(r).lower, &layer.rank(r).upper}) {
        for (const auto& e : *side) {
          CHECK(e.source_rank == r);
          for (const auto& t : e.terms) CHECK(t.rank < r);
          auto rebuilt = make_bound_expression(e.source, ordering.column(r), ordering);
          rebuilt.original = set.contains(e.source);
          CHECK(e == rebuilt);
        }
      }
    }
  }
}

TEST_CASE("satisfiability agrees with the exact oracle") {
  std::mt19937_64 rng(1234);
  testing::SystemShape shape;
  shape.max_vars = 3;
  shape.max_constraints = 6;
  for (int i = 0; i < 150; ++i) {
    const auto system = i % 3 == 0   ? testing::random_infeasible(rng, shape)
                        : i % 3 == 1 ? testing::random_satisfiable(rng, shape)
                                     : testing::random_system(rng, shape);
    const auto set = testing::to_constraint_set(system, testing::numbered_schema(system.dims));
    CHECK(check_satisfiable(set).satisfiable == testing::exactly_feasible(system));
    if (i % 3 == 0) CHECK_FALSE(testing::exactly_feasible(system));
  }
}

TEST_CASE("the result does not depend on the elimination order") {
  std::mt19937_64 rng(99);
  testing::SystemShape shape;
  shape.max_vars = 5;
  shape.max_constraints = 8;
  for (int i = 0; i < 80; ++i) {
    const auto system = testing::random_system(rng, shape);
    const auto schema = testing::numbered_schema(system.dims);
    const auto set = testing::to_constraint_set(system, schema);
    const bool reference = check_satisfiable(set).satisfiable;
    for (int k = 0; k < 3; ++k) {
      CHECK(check_satisfiable(set, random_ordering(schema, rng())).satisfiable == reference);
    }
  }
}
