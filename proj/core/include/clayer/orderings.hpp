#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "clayer/dataset.hpp"
#include "clayer/fm.hpp"

namespace clayer {

/// Per-feature scores behind a data-driven ordering. Lower scores are
/// ranked earlier; ties keep schema order.
struct OrderingScores {
  std::string method;
  /// (column, score) for every continuous column, in schema order.
  std::vector<std::pair<std::size_t, double>> scores;
};

struct OrderingResult {
  VariableOrdering ordering;
  OrderingScores scores;
};

/// Stable ascending sort of the scored columns.
VariableOrdering ordering_from_scores(const FeatureSchema& schema, const OrderingScores& scores);

/// Uniform permutation of the continuous features. Uses its own bounded
/// draw on top of mt19937_64, so a seed gives the same ordering everywhere.
VariableOrdering random_ordering(const FeatureSchema& schema, std::uint64_t seed);

/// Pearson correlation; 0 when either column is constant.
double pearson(std::span<const double> a, std::span<const double> b);

/// sigma_i = | sum_{j != i} corr_real(i, j) - sum_{j != i} corr_synth(i, j) |
/// over continuous columns. Needs at least two rows in each dataset.
OrderingResult corr_ordering(const Dataset& real, const Dataset& synth);

struct KdeBandwidth {
  enum class Kind { scott, fixed };
  Kind kind = Kind::scott;
  double value = 0.0;

  static KdeBandwidth scott() { return {}; }
  static KdeBandwidth fixed(double h);
};

/// Gaussian product-kernel KDE fitted on the real data's continuous
/// columns; every row of both datasets is scored, the scores are turned
/// into probabilities per corpus, and each feature gets the KL divergence
/// between the two discrete marginals built from those probabilities.
OrderingResult kde_ordering(const Dataset& real, const Dataset& synth,
                            KdeBandwidth bandwidth = KdeBandwidth::scott());

/// Additive smoothing applied to both marginals before the KL divergence.
inline constexpr double kKdeSmoothing = 1e-12;

/// Per-feature bandwidths the KDE uses for `real`.
std::vector<double> kde_bandwidths(const Dataset& real, KdeBandwidth bandwidth);

/// Exact 1-D Wasserstein-1 distance between two empirical distributions.
double wasserstein_1d(std::vector<double> a, std::vector<double> b);

OrderingResult wasserstein_ordering(const Dataset& real, const Dataset& synth);

/// Ordering file: one feature name per line, rank = line number.
/// Categorical features are listed after the ranked ones and ignored on read.
std::string format_ordering_file(const VariableOrdering& ordering, const FeatureSchema& schema);
VariableOrdering parse_ordering_file(std::string_view text, const FeatureSchema& schema);

}  // namespace clayer
