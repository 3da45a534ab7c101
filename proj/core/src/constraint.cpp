#include "clayer/constraint.hpp"

#include <algorithm>
#include <bit>
#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "clayer/error.hpp"

namespace clayer {

LinearConstraint::LinearConstraint(std::vector<Term> terms, double bias, bool strict)
    : bias_(bias + 0.0), strict_(strict) {
  std::stable_sort(terms.begin(), terms.end(),
                   [](const Term& a, const Term& b) { return a.column < b.column; });
  terms_.reserve(terms.size());
  for (const auto& term : terms) {
    if (!terms_.empty() && terms_.back().column == term.column) {
      terms_.back().weight += term.weight;
    } else {
      terms_.push_back(term);
    }
  }
  std::erase_if(terms_, [](const Term& t) { return t.weight == 0.0; });
}

double LinearConstraint::weight(std::size_t column) const noexcept {
  auto it = std::lower_bound(terms_.begin(), terms_.end(), column,
                             [](const Term& t, std::size_t c) { return t.column < c; });
  if (it != terms_.end() && it->column == column) return it->weight;
  return 0.0;
}

double LinearConstraint::evaluate(std::span<const double> row) const noexcept {
  double sum = 0.0;
  for (const auto& term : terms_) {
    sum += term.weight * row[term.column];
  }
  return sum + bias_;
}

bool LinearConstraint::violated_by(std::span<const double> row, double slack) const noexcept {
  const double value = evaluate(row);
  return strict_ ? value <= -slack : value < -slack;
}

namespace {

using BigInt = boost::multiprecision::cpp_int;

// Finite doubles are integer multiples of 2^-1074; products of two are
// integers at 2^-2148.
constexpr int kUnitShift = 1074;

BigInt scaled(double x, int shift) {
  if (x == 0.0) return 0;
  int exponent = 0;
  const double fraction = std::frexp(x, &exponent);
  BigInt m = static_cast<long long>(std::ldexp(fraction, 53));
  const int power = exponent - 53 + shift;
  return power >= 0 ? BigInt(m << power) : BigInt(m >> -power);
}

// Generous bound on the rounding error of summing n products and a bias
// whose absolute values add up to `magnitude`.
double rounding_bound(std::size_t n, double magnitude) {
  return 4.0 * static_cast<double>(n + 1) * std::numeric_limits<double>::epsilon() * magnitude +
         std::numeric_limits<double>::denorm_min();
}

}  // namespace

int LinearConstraint::exact_sign(std::span<const double> row) const {
  // Each product splits exactly into hi + lo with fma, and the running sum is
  // kept as a nonoverlapping expansion, so the largest component has the
  // sign of the total. Underflow breaks the split; fall back to big integers.
  constexpr double kTiny = 0x1p-900;
  std::vector<double> expansion;
  expansion.reserve(2 * terms_.size() + 1);
  auto grow = [&](double b) {
    std::size_t kept = 0;
    for (double& e : expansion) {
      const double sum = e + b;
      const double bv = sum - e;
      const double err = (e - (sum - bv)) + (b - bv);
      b = sum;
      if (err != 0.0) expansion[kept++] = err;
    }
    expansion.resize(kept);
    if (b != 0.0) expansion.push_back(b);
  };
  bool exact = true;
  for (const auto& term : terms_) {
    const double hi = term.weight * row[term.column];
    const bool vanishing = row[term.column] != 0.0 && std::fabs(hi) < kTiny;
    if (vanishing || !std::isfinite(hi)) exact = false;
    if (!exact) break;
    grow(std::fma(term.weight, row[term.column], -hi));
    grow(hi);
  }
  if (exact) grow(bias_);
  if (exact && (expansion.empty() || std::isfinite(expansion.back()))) {
    if (expansion.empty()) return 0;
    return expansion.back() > 0 ? 1 : -1;
  }
  BigInt sum = scaled(bias_, 2 * kUnitShift);
  for (const auto& term : terms_) {
    sum += scaled(term.weight, kUnitShift) * scaled(row[term.column], kUnitShift);
  }
  return sum > 0 ? 1 : sum < 0 ? -1 : 0;
}

bool LinearConstraint::violated_robustly(std::span<const double> row) const {
  double sum = 0.0;
  double magnitude = std::fabs(bias_);
  for (const auto& term : terms_) {
    const double p = term.weight * row[term.column];
    sum += p;
    magnitude += std::fabs(p);
  }
  const double value = sum + bias_;
  if (strict_ ? value <= 0.0 : value < 0.0) return true;
  if (value > rounding_bound(terms_.size(), magnitude)) return false;
  const int sign = exact_sign(row);
  return strict_ ? sign <= 0 : sign < 0;
}

bool LinearConstraint::violated_exactly(std::span<const double> row) const {
  double sum = 0.0;
  double magnitude = std::fabs(bias_);
  for (const auto& term : terms_) {
    const double p = term.weight * row[term.column];
    sum += p;
    magnitude += std::fabs(p);
  }
  const double value = sum + bias_;
  if (std::fabs(value) > rounding_bound(terms_.size(), magnitude)) return value < 0.0;
  const int sign = exact_sign(row);
  return strict_ ? sign <= 0 : sign < 0;
}

std::size_t LinearConstraintHash::operator()(const LinearConstraint& c) const noexcept {
  auto mix = [](std::uint64_t h, std::uint64_t v) {
    h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return h;
  };
  std::uint64_t h = c.strict() ? 1 : 2;
  h = mix(h, std::bit_cast<std::uint64_t>(c.bias()));
  for (const auto& term : c.terms()) {
    h = mix(h, term.column);
    h = mix(h, std::bit_cast<std::uint64_t>(term.weight));
  }
  return static_cast<std::size_t>(h);
}

bool ConstraintSet::add(LinearConstraint constraint) {
  for (const auto& term : constraint.terms()) {
    if (term.column >= schema_.size()) {
      throw Error(ErrorKind::unknown_feature,
                  "constraint references column " + std::to_string(term.column) +
                      " outside the schema");
    }
    if (!schema_.is_continuous(term.column)) {
      throw Error(ErrorKind::categorical_in_constraint,
                  "constraint mentions categorical feature '" + schema_[term.column].name + "'");
    }
  }
  if (constraint.is_constant() && constraint.constant_holds()) {
    return false;
  }
  if (!seen_.insert(constraint).second) {
    return false;
  }
  if (constraint.is_constant() && !contradiction_) {
    contradiction_ = constraint;
  }
  constraints_.push_back(std::move(constraint));
  return true;
}

std::vector<std::size_t> ConstraintSet::constrained_columns() const {
  std::vector<bool> used(schema_.size(), false);
  for (const auto& c : constraints_) {
    for (const auto& term : c.terms()) used[term.column] = true;
  }
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < used.size(); ++i) {
    if (used[i]) out.push_back(i);
  }
  return out;
}

bool ConstraintSet::satisfied_by(std::span<const double> row, double slack) const noexcept {
  return std::all_of(constraints_.begin(), constraints_.end(),
                     [&](const LinearConstraint& c) { return c.satisfied_by(row, slack); });
}

ConstraintSet ConstraintSet::relaxed() const {
  ConstraintSet out(schema_);
  for (const auto& c : constraints_) out.add(c.relaxed());
  return out;
}

}  // namespace clayer
