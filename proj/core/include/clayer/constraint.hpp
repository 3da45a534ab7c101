#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <unordered_set>
#include <vector>

#include "clayer/schema.hpp"

namespace clayer {

struct Term {
  std::size_t column = 0;
  double weight = 0.0;

  bool operator==(const Term&) const = default;
};

/// One inequality `sum_k w_k * x_k + b >= 0` (or `> 0` when strict).
///
/// Terms are kept sorted by column with no zero weights, so two constraints
/// compare equal exactly when they are the same inequality term by term.
class LinearConstraint {
 public:
  LinearConstraint() = default;
  /// Sorts terms, merges repeated columns and drops zero weights.
  LinearConstraint(std::vector<Term> terms, double bias, bool strict);

  const std::vector<Term>& terms() const noexcept { return terms_; }
  double bias() const noexcept { return bias_; }
  bool strict() const noexcept { return strict_; }

  /// Weight of `column`, 0 when absent.
  double weight(std::size_t column) const noexcept;
  bool mentions(std::size_t column) const noexcept { return weight(column) != 0.0; }
  bool is_constant() const noexcept { return terms_.empty(); }
  /// For a variable-free constraint: whether `b >= 0` (or `b > 0`) holds.
  bool constant_holds() const noexcept { return strict_ ? bias_ > 0.0 : bias_ >= 0.0; }

  /// `sum_k w_k * row[k] + b`, summed in column order. Every consumer that
  /// decides satisfaction goes through this one routine.
  double evaluate(std::span<const double> row) const noexcept;

  /// A non-strict constraint is violated when the value drops below -slack;
  /// a strict one when the value is <= -slack (so exactly 0 violates at slack 0).
  bool violated_by(std::span<const double> row, double slack = 0.0) const noexcept;
  bool satisfied_by(std::span<const double> row, double slack = 0.0) const noexcept {
    return !violated_by(row, slack);
  }

  /// Sign of the value over the reals, with no rounding anywhere.
  int exact_sign(std::span<const double> row) const;
  bool violated_exactly(std::span<const double> row) const;
  /// Violated in floating point, or violated exactly. Exact arithmetic only
  /// runs when the floating-point value is within rounding of zero.
  bool violated_robustly(std::span<const double> row) const;

  LinearConstraint relaxed() const { return LinearConstraint(terms_, bias_, false); }

  bool operator==(const LinearConstraint&) const = default;

 private:
  std::vector<Term> terms_;
  double bias_ = 0.0;
  bool strict_ = false;
};

struct LinearConstraintHash {
  std::size_t operator()(const LinearConstraint& c) const noexcept;
};

/// The finite set of constraints over a schema. Exact duplicates and
/// variable-free tautologies are dropped on insertion; a variable-free
/// constraint that is false is kept and marks the set unsatisfiable.
class ConstraintSet {
 public:
  ConstraintSet() = default;
  explicit ConstraintSet(FeatureSchema schema) : schema_(std::move(schema)) {}

  /// Returns false when the constraint was dropped (duplicate or tautology).
  /// Throws CategoricalInConstraint / UnknownFeature for bad columns.
  bool add(LinearConstraint constraint);

  const FeatureSchema& schema() const noexcept { return schema_; }
  const std::vector<LinearConstraint>& constraints() const noexcept { return constraints_; }
  std::size_t size() const noexcept { return constraints_.size(); }
  bool empty() const noexcept { return constraints_.empty(); }
  auto begin() const noexcept { return constraints_.begin(); }
  auto end() const noexcept { return constraints_.end(); }
  const LinearConstraint& operator[](std::size_t i) const { return constraints_[i]; }

  bool trivially_unsatisfiable() const noexcept { return contradiction_.has_value(); }
  /// First false variable-free constraint, if any.
  const std::optional<LinearConstraint>& contradiction() const noexcept { return contradiction_; }

  /// Columns mentioned by at least one constraint, ascending.
  std::vector<std::size_t> constrained_columns() const;

  bool satisfied_by(std::span<const double> row, double slack = 0.0) const noexcept;
  bool contains(const LinearConstraint& c) const { return seen_.contains(c); }

  /// Copy with every strict inequality replaced by its non-strict form.
  ConstraintSet relaxed() const;

 private:
  FeatureSchema schema_;
  std::vector<LinearConstraint> constraints_;
  std::unordered_set<LinearConstraint, LinearConstraintHash> seen_;
  std::optional<LinearConstraint> contradiction_;
};

}  // namespace clayer
