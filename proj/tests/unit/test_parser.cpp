#include <clayer/error.hpp>
#include <clayer/numeric_format.hpp>
#include <clayer/parser.hpp>
#include <cmath>
#include <doctest.h>
#include <random>

#include "random_systems.hpp"

using namespace clayer;

namespace {

FeatureSchema two() { return testing::numbered_schema(2); }

LinearConstraint only(const ConstraintSet& set) {
  REQUIRE(set.size() == 1);
  return set[0];
}

ErrorKind kind_of(std::string_view text, const FeatureSchema& schema) {
  try {
    parse_constraints(text, schema);
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error for: " << text);
  return ErrorKind::invalid_argument;
}

}  // namespace

TEST_CASE("readme grammar example") {
  const auto set = parse_constraints("x1 - x2 >= 0\nx2 - 5 > 0\n", two());
  REQUIRE(set.size() == 2);
  CHECK(format_constraint(set[0], set.schema()) == "1*x1 - 1*x2 + 0 >= 0");
  CHECK(format_constraint(set[1], set.schema()) == "1*x2 - 5 > 0");
  CHECK_FALSE(set[0].strict());
  CHECK(set[1].strict());
}

TEST_CASE("comparators normalize to >= 0 and > 0") {
  const auto s = two();
  auto c = only(parse_constraints("x1 <= x2", s));
  CHECK(c == LinearConstraint({{0, -1}, {1, 1}}, 0, false));
  c = only(parse_constraints("x1 < 2*x2 + 1", s));
  CHECK(c == LinearConstraint({{0, -1}, {1, 2}}, 1, true));
  c = only(parse_constraints("3 > x1", s));
  CHECK(c == LinearConstraint({{0, -1}}, 3, true));
  c = only(parse_constraints("x1 >= -x2", s));
  CHECK(c == LinearConstraint({{0, 1}, {1, 1}}, 0, false));

  const auto eq = parse_constraints("x1 = x2 + 4", s);
  REQUIRE(eq.size() == 2);
  CHECK(eq[0] == LinearConstraint({{0, 1}, {1, -1}}, -4, false));
  CHECK(eq[1] == LinearConstraint({{0, -1}, {1, 1}}, 4, false));
  CHECK(parse_constraints("x1 == x2", s).size() == 2);
}

TEST_CASE("coefficients are combined exactly before rounding") {
  const auto c = only(parse_constraints("0.1*x1 + 0.2*x1 >= 0.3", testing::numbered_schema(1)));
  CHECK(c.weight(0) == 0.3);  // 0.1 + 0.2 in doubles would be 0.30000000000000004
  CHECK(c.bias() == -0.3);
  const auto d = only(parse_constraints("2 * 3 * x1 - x1 * 0.5 >= 1e2", testing::numbered_schema(1)));
  CHECK(d.weight(0) == 5.5);
  CHECK(d.bias() == -100);
}

TEST_CASE("cancelling terms and constants") {
  const auto s = two();
  auto c = only(parse_constraints("x1 + x2 - x2 >= 1", s));
  CHECK(c.terms().size() == 1);
  // True constants are dropped, false ones mark the set unsatisfiable.
  CHECK(parse_constraints("x1 - x1 >= -1", s).empty());
  const auto bad = parse_constraints("x1 - x1 > 0", s);
  CHECK(bad.trivially_unsatisfiable());
  CHECK(format_constraint(*bad.contradiction(), s) == "0 > 0");
}

TEST_CASE("duplicates collapse") {
  const auto set = parse_constraints("x1 >= x2\nx1 - x2 >= 0\n2*x1 >= 2*x2\n", two());
  CHECK(set.size() == 2);  // scaling is a different constraint term by term
}

TEST_CASE("comments, blank lines, CRLF, signs") {
  const auto set = parse_constraints("# header\r\n\r\n  x1 >= -2 # trailing\r\n-x2 < +3\n", two());
  REQUIRE(set.size() == 2);
  CHECK(set[0] == LinearConstraint({{0, 1}}, 2, false));
  CHECK(set[1] == LinearConstraint({{1, 1}}, 3, true));
}

TEST_CASE("syntax errors carry line and column") {
  const auto s = two();
  try {
    parse_constraints("x1 >= 0\nx1 >= = 2\n", s);
    FAIL("expected a syntax error");
  } catch (const SyntaxError& e) {
    CHECK(e.line() == 2);
    CHECK(e.column() == 7);
  }
  CHECK(kind_of("x1 * x2 >= 0", s) == ErrorKind::syntax_error);
  CHECK(kind_of("x1 >= 0 >= x2", s) == ErrorKind::syntax_error);
  CHECK(kind_of("x1 != 0", s) == ErrorKind::syntax_error);
  CHECK(kind_of("2x1 >= 0", s) == ErrorKind::syntax_error);
  CHECK(kind_of("x1 + >= 0", s) == ErrorKind::syntax_error);
  CHECK(kind_of("x1 >= 1e", s) == ErrorKind::syntax_error);
  CHECK(parse_constraints("x1 >= 1e5", s)[0].bias() == -1e5);
  CHECK(kind_of("x1", s) == ErrorKind::syntax_error);
  CHECK(kind_of("x3 >= 0", s) == ErrorKind::unknown_feature);
  const FeatureSchema mixed({{"a", FeatureKind::continuous}, {"g", FeatureKind::categorical}});
  CHECK(kind_of("a + g >= 0", mixed) == ErrorKind::categorical_in_constraint);
}

TEST_CASE("format then parse reproduces constraints bit for bit") {
  std::mt19937_64 rng(11);
  const auto schema = testing::numbered_schema(5);
  std::uniform_real_distribution<double> u(-1000, 1000);
  std::uniform_int_distribution<int> pick(0, 3);
  for (int i = 0; i < 2000; ++i) {
    std::vector<Term> terms;
    for (std::size_t k = 0; k < 5; ++k) {
      switch (pick(rng)) {
        case 0: break;
        case 1: terms.push_back({k, std::round(u(rng))}); break;
        default: terms.push_back({k, u(rng) / 7.0}); break;
      }
    }
    const LinearConstraint c(terms, u(rng) * 1e-3, pick(rng) == 0);
    if (c.is_constant()) continue;
    const auto text = format_constraint(c, schema);
    const auto back = only(parse_constraints(text, schema));
    CHECK_MESSAGE(back == c, text);
  }
}

TEST_CASE("rational to double rounds correctly") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<long long> num(-(1LL << 53), 1LL << 53);
  std::uniform_int_distribution<long long> den(1, 1LL << 53);
  for (int i = 0; i < 5000; ++i) {
    const long long p = num(rng);
    const long long q = den(rng);
    // IEEE division of exactly representable operands is correctly rounded.
    CHECK(to_double(Rational(p, q)) == static_cast<double>(p) / static_cast<double>(q));
  }
  std::uniform_real_distribution<double> u(0.5, 1.0);
  for (int i = 0; i < 2000; ++i) {
    const double x = u(rng);
    const int shift = 1000 + static_cast<int>(rng() % 80);
    Rational r = to_rational(x);
    r /= boost::multiprecision::pow(boost::multiprecision::cpp_int(2), shift);
    CHECK(to_double(r) == std::ldexp(x, -shift));
  }
  CHECK(to_double(to_rational(0.1)) == 0.1);
  CHECK(std::isinf(to_double(Rational(boost::multiprecision::pow(boost::multiprecision::cpp_int(10), 400)))));
}

TEST_CASE("shortest decimal formatting") {
  CHECK(format_double(5.1) == "5.1");
  CHECK(format_double(-0.0) == "0");
  CHECK(format_double(1e-300) == "1e-300");
  CHECK(parse_double("+2.5") == 2.5);
  CHECK_FALSE(parse_double("2.5x").has_value());
  CHECK_FALSE(parse_double("inf").has_value());
  CHECK_FALSE(parse_double("").has_value());
}
