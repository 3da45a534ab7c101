#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "clayer/constraint.hpp"
#include "clayer/schema.hpp"

namespace clayer {

/// Exact rational used while combining decimal literals.
using Rational = boost::multiprecision::cpp_rational;

/// Correctly rounded (nearest, ties to even) conversion; +-inf on overflow.
double to_double(const Rational& value);
/// Exact conversion of a finite double.
Rational to_rational(double value);

enum class Comparator { less, less_equal, equal, greater_equal, greater };

/// `sum_k coefficients[k] * x_k + constant` with exact coefficients.
struct AffineForm {
  std::map<std::size_t, Rational> coefficients;
  Rational constant;
};

/// Rewrites `lhs cmp rhs` into constraints of the form `sum w x + b >= 0`
/// (or `> 0`). Equalities become two opposite non-strict inequalities.
/// Arithmetic is exact; each coefficient is rounded to double once.
std::vector<LinearConstraint> normalize_constraint(const AffineForm& lhs, Comparator cmp,
                                                   const AffineForm& rhs);

/// Affine form of an already normalized constraint, taken exactly.
AffineForm to_affine(const LinearConstraint& constraint);

/// Parses newline-separated statements `affine CMP affine`.
///
///   affine := [+|-] term { (+|-) term }
///   term   := factor { '*' factor }        (at most one feature per term)
///   factor := number | feature-name
///   CMP    := < | <= | = | >= | >
///
/// `#` starts a comment. Throws SyntaxError (with 1-based line and column),
/// UnknownFeature or CategoricalInConstraint.
ConstraintSet parse_constraints(std::string_view text, const FeatureSchema& schema);

/// Canonical text `w1*name1 + w2*name2 + b >= 0`, terms in column order and
/// numbers in shortest round-trip form, so parse_constraints reproduces the
/// constraint bit for bit.
std::string format_constraint(const LinearConstraint& constraint, const FeatureSchema& schema);

/// One formatted constraint per line.
std::string format_constraints(const ConstraintSet& constraints);

}  // namespace clayer
