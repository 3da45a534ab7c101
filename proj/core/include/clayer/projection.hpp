#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "clayer/dataset.hpp"
#include "clayer/error.hpp"
#include "clayer/fm.hpp"

namespace clayer {

class EpsilonPolicy {
 public:
  enum class Mode { machine_min, fixed };

  /// Smallest positive normal double.
  static EpsilonPolicy machine_min() noexcept { return EpsilonPolicy(Mode::machine_min, kMin); }
  /// Throws InvalidArgument unless `value` is finite and positive.
  static EpsilonPolicy fixed(double value);

  Mode mode() const noexcept { return mode_; }
  double value() const noexcept { return value_; }

 private:
  static constexpr double kMin = std::numeric_limits<double>::min();
  EpsilonPolicy(Mode mode, double value) : mode_(mode), value_(value) {}

  Mode mode_;
  double value_;
};

struct Bounds {
  double lb = -std::numeric_limits<double>::infinity();
  double ub = std::numeric_limits<double>::infinity();
  bool lb_strict = false;
  bool ub_strict = false;
  /// Index into the rank's lower/upper table of the expression attaining the bound.
  std::optional<std::size_t> lb_source;
  std::optional<std::size_t> ub_source;
  /// The evaluated bounds crossed within tolerance and were merged.
  bool collapsed = false;
};

/// Which composition realizes the clamp: min(max(x, lb), ub) or
/// max(min(x, ub), lb). On a satisfiable layer both give the same value.
enum class ClampOrder { max_then_min, min_then_max };

struct ApplyOptions {
  EpsilonPolicy epsilon = EpsilonPolicy::machine_min();
  /// Allowed violation in the final check against the original constraints.
  double slack = 0.0;
  /// Relative amount by which ub may fall below lb before the crossing is
  /// reported as InfeasibleBounds; smaller crossings are rounding noise and
  /// collapse onto their midpoint.
  double bound_tolerance = 1e-9;
  ClampOrder order = ClampOrder::max_then_min;
  /// When the exact clamp leaves a row that fails the check in floating
  /// point, the row is redone with every bound pulled inside by 4, 16, 64...
  /// ulps, up to this many.
  double max_margin_ulps = 65536;
};

/// Greatest lower / least upper bound at `rank`. `row` is indexed by schema
/// column; only columns of ranks below `rank` are read. Ties on the bound
/// value resolve in favour of strict expressions.
Bounds compute_bounds(const CompiledLayer& layer, Rank rank, std::span<const double> row,
                      double bound_tolerance = 1e-9);

/// Strictness-aware clamp of one value into its bounds. When the result
/// sits exactly on a strict bound it is pushed inside by epsilon, halving
/// epsilon until the pushed value still respects the opposite bound.
/// Throws DegenerateStrictInterval when lb == ub and either side is strict.
double clamp(double x, const Bounds& bounds, const EpsilonPolicy& epsilon,
             ClampOrder order = ClampOrder::max_then_min);

/// Corrected copy of `sample` (indexed by schema column). Rows that already
/// satisfy the constraints are returned unchanged. Throws PostCheckFailed
/// if the corrected row still violates the constraints beyond the slack.
std::vector<double> apply(const CompiledLayer& layer, std::span<const double> sample,
                          const ApplyOptions& options = {});

struct ApplyTrace {
  std::vector<double> output;
  /// Bounds at ranks 1..D' (empty when the sample was already feasible).
  std::vector<Bounds> bounds;
  bool passed_through = false;
  /// Inward margin the successful pass used; 0 for the exact clamp.
  double margin_ulps = 0;
};

ApplyTrace apply_traced(const CompiledLayer& layer, std::span<const double> sample,
                        const ApplyOptions& options = {});

struct RowFailure {
  std::size_t row = 0;
  ErrorKind kind = ErrorKind::post_check_failed;
  std::string message;
};

class DatasetApplyError : public Error {
 public:
  explicit DatasetApplyError(std::vector<RowFailure> failures);
  const std::vector<RowFailure>& failures() const noexcept { return failures_; }

 private:
  std::vector<RowFailure> failures_;
};

/// Row-wise apply preserving row order; the result does not depend on
/// `parallelism`. Throws DatasetApplyError listing every failing row.
Dataset apply_dataset(const CompiledLayer& layer, const Dataset& dataset,
                      const ApplyOptions& options = {}, unsigned parallelism = 1);

enum class BoundaryPolicy {
  clamped,  // treat near-boundary coordinates as clamped
  free,     // treat them as passing through
  error,    // throw OnBoundary
};

struct JacobianOptions {
  ApplyOptions apply;
  BoundaryPolicy boundary = BoundaryPolicy::clamped;
  /// Distance to the active bound (or between competing bounds) below which
  /// a coordinate counts as sitting on a boundary.
  double boundary_tolerance = 1e-9;
};

/// Row-major D x D matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
};

/// Jacobian of the piecewise-affine correction map at `sample`.
Matrix jacobian(const CompiledLayer& layer, std::span<const double> sample,
                const JacobianOptions& options = {});

}  // namespace clayer
