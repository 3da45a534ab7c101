#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "clayer/constraint.hpp"
#include "clayer/error.hpp"
#include "clayer/schema.hpp"

namespace clayer {

/// 1-based position of a feature in the correction order.
using Rank = std::size_t;

/// Injective map from continuous columns to ranks 1..size().
class VariableOrdering {
 public:
  VariableOrdering() = default;
  /// `columns[r - 1]` is the column at rank r. Throws InvalidOrdering on
  /// repeated, out-of-range or categorical columns.
  VariableOrdering(const FeatureSchema& schema, std::vector<std::size_t> columns);

  /// Every continuous column in schema order.
  static VariableOrdering natural(const FeatureSchema& schema);
  /// Resolves feature names; categorical names are skipped.
  static VariableOrdering from_names(const FeatureSchema& schema,
                                     std::span<const std::string> names);

  std::size_t size() const noexcept { return columns_.size(); }
  std::size_t column(Rank rank) const { return columns_.at(rank - 1); }
  std::optional<Rank> rank(std::size_t column) const;
  const std::vector<std::size_t>& columns() const noexcept { return columns_; }

  /// Throws InvalidOrdering unless every constrained column is ranked.
  void require_covers(const ConstraintSet& constraints) const;

  bool operator==(const VariableOrdering& other) const { return columns_ == other.columns_; }

 private:
  std::vector<std::size_t> columns_;
  std::vector<Rank> rank_of_;  // by column, 0 = unranked
};

enum class BoundSide { lower, upper };

struct BoundTerm {
  Rank rank = 0;
  std::size_t column = 0;
  double coefficient = 0.0;

  bool operator==(const BoundTerm&) const = default;
};

/// Bound on the feature at `source_rank` induced by one constraint phi with
/// nonzero weight w_i on that feature:
///   x_i >= -sum_{k != i} (w_k / w_i) x_k - b / w_i   (w_i > 0, lower)
///   x_i <= ...                                        (w_i < 0, upper)
/// After compilation every term refers to a rank below `source_rank`.
struct BoundExpression {
  Rank source_rank = 0;
  std::vector<BoundTerm> terms;
  double offset = 0.0;
  bool strict = false;
  BoundSide side = BoundSide::lower;
  /// The member of the elimination chain this bound was read off.
  LinearConstraint source;
  /// Whether `source` is one of the user's constraints rather than derived.
  bool original = false;

  double evaluate(std::span<const double> row) const noexcept {
    double value = offset;
    for (const auto& term : terms) value += term.coefficient * row[term.column];
    return value;
  }

  bool operator==(const BoundExpression&) const = default;
};

BoundExpression make_bound_expression(const LinearConstraint& constraint, std::size_t column,
                                      const VariableOrdering& ordering);

struct SatReport {
  bool satisfiable = true;
  /// Variable-free constraint found false; present iff unsatisfiable.
  std::optional<LinearConstraint> witness;
  /// |Pi_i| for i = D' down to 1, followed by |Pi_0|.
  std::vector<std::size_t> per_rank_sizes;
};

class UnsatisfiableError : public Error {
 public:
  UnsatisfiableError(SatReport report, const std::string& message)
      : Error(ErrorKind::unsatisfiable, message), report_(std::move(report)) {}
  const SatReport& report() const noexcept { return report_; }

 private:
  SatReport report_;
};

struct Partition {
  std::vector<LinearConstraint> plus;   // positive weight on the column
  std::vector<LinearConstraint> minus;  // negative weight on the column
  std::vector<LinearConstraint> rest;   // column absent
};

Partition partition(const ConstraintSet& constraints, std::size_t column);

/// Coefficients produced by reduction below this magnitude are treated as
/// floating-point noise and dropped.
inline constexpr double kReductionZeroThreshold = 1e-12;

/// Combination of `negative` (w < 0 on column) and `positive` (w > 0) that
/// cancels the column. The result is strict iff either input is strict.
/// Throws WrongSigns when the sign preconditions fail.
LinearConstraint reduce_pair(const LinearConstraint& negative, const LinearConstraint& positive,
                             std::size_t column);

inline constexpr std::size_t kDefaultBlowupCap = 100000;

/// One elimination step: drops every constraint mentioning `column` and adds
/// all pairwise reductions. Tautologies and duplicates are pruned; a false
/// variable-free result is kept (see ConstraintSet::contradiction()).
/// Throws BlowupLimitExceeded when the result would exceed `cap` constraints.
ConstraintSet eliminate(const ConstraintSet& constraints, std::size_t column,
                        std::size_t cap = kDefaultBlowupCap);

/// Eliminates every rank of `ordering` (highest first) down to the
/// variable-free set; satisfiable iff no false constant ever appears.
SatReport check_satisfiable(const ConstraintSet& constraints, const VariableOrdering& ordering,
                            std::size_t cap = kDefaultBlowupCap);
SatReport check_satisfiable(const ConstraintSet& constraints,
                            std::size_t cap = kDefaultBlowupCap);

struct RankTable {
  std::vector<BoundExpression> lower;
  std::vector<BoundExpression> upper;
  /// |Pi_i|: constraints alive when this rank was eliminated.
  std::size_t chain_size = 0;

  bool operator==(const RankTable&) const = default;
};

/// Per-rank bound tables read off the elimination chain. Immutable once
/// built; safe to share across threads.
class CompiledLayer {
 public:
  CompiledLayer() = default;
  CompiledLayer(ConstraintSet constraints, VariableOrdering ordering, std::vector<RankTable> ranks,
                std::size_t residual_size);

  const FeatureSchema& schema() const noexcept { return constraints_.schema(); }
  const ConstraintSet& constraints() const noexcept { return constraints_; }
  const VariableOrdering& ordering() const noexcept { return ordering_; }
  std::size_t rank_count() const noexcept { return ranks_.size(); }
  const RankTable& rank(Rank r) const { return ranks_.at(r - 1); }
  const std::vector<RankTable>& ranks() const noexcept { return ranks_; }
  /// Same layout as SatReport::per_rank_sizes.
  std::vector<std::size_t> per_rank_sizes() const;

  bool operator==(const CompiledLayer& other) const;

 private:
  ConstraintSet constraints_;
  VariableOrdering ordering_;
  std::vector<RankTable> ranks_;
  std::size_t residual_size_ = 0;
};

struct CompileOptions {
  std::size_t cap = kDefaultBlowupCap;
};

/// Throws UnsatisfiableError, BlowupLimitExceeded or InvalidOrdering.
CompiledLayer compile(const ConstraintSet& constraints, const VariableOrdering& ordering,
                      const CompileOptions& options = {});

}  // namespace clayer
