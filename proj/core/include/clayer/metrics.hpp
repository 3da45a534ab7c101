#pragma once

#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "clayer/constraint.hpp"
#include "clayer/dataset.hpp"

namespace clayer {

/// Percentage of rows violating at least one constraint.
/// Throws EmptyDataset. An empty constraint set gives 0.
double cvr(const Dataset& data, const ConstraintSet& constraints, double slack = 0.0);

/// Percentage of constraints violated by at least one row.
/// Throws EmptyConstraintSet.
double cvc(const Dataset& data, const ConstraintSet& constraints, double slack = 0.0);

/// Mean over rows of the percentage of constraints each row violates.
/// Throws EmptyDataset and EmptyConstraintSet.
double scvc(const Dataset& data, const ConstraintSet& constraints, double slack = 0.0);

/// Number of violating rows per constraint, in constraint order.
std::vector<std::size_t> violation_counts(const Dataset& data, const ConstraintSet& constraints,
                                          double slack = 0.0);

/// Percentage of rows within w/2 (Euclidean, raw units) of the boundary line
/// of a two-feature constraint, where w = sqrt((r1 p)^2 + (r2 p)^2) and
/// r1, r2 are the value ranges of the constraint's features in column order.
/// Throws NotTwoVariable.
double boundary_rate(const Dataset& data, const LinearConstraint& constraint, double p,
                     std::pair<double, double> ranges);

/// max - min of a column.
double column_range(const Dataset& data, std::size_t column);

/// W1 distance per continuous feature, keyed by name.
std::map<std::string, double> wasserstein_per_feature(const Dataset& real, const Dataset& synth);

/// Base-2 Jensen-Shannon divergence of the category frequencies, per
/// categorical feature. Throws NoCategoricalFeatures.
std::map<std::string, double> jsd_per_feature(const Dataset& real, const Dataset& synth);

/// Base-2 JSD between two discrete distributions over the same support.
double jensen_shannon(std::span<const double> p, std::span<const double> q);

struct BoundaryEntry {
  std::string constraint;
  double p = 0.0;
  double rate = 0.0;
};

struct MetricsReport {
  std::string model_label;
  std::string dataset_label;
  std::size_t rows = 0;
  double cvr = 0.0;
  double cvc = 0.0;
  double scvc = 0.0;
  /// (formatted constraint, violating rows)
  std::vector<std::pair<std::string, std::size_t>> per_constraint_violations;
  std::vector<BoundaryEntry> boundary;
  std::optional<std::map<std::string, double>> wasserstein;
  std::optional<std::map<std::string, double>> jsd;
};

struct ReportOptions {
  double slack = 0.0;
  std::string model_label;
  std::string dataset_label;
  /// Proportions for the boundary band; empty disables the section.
  std::vector<double> boundary_p;
};

/// CVR/CVC/sCVC always; boundary rates for every two-feature constraint when
/// requested (ranges come from `real`, or from `data` without it); WD/JSD
/// sections only with `real`. An empty constraint set reports 0 coverage.
MetricsReport build_report(const Dataset& data, const ConstraintSet& constraints,
                           const Dataset* real, const ReportOptions& options = {});

nlohmann::json report_to_json(const MetricsReport& report);
/// Aligned plain-text table: one summary row, then the detail sections.
std::string report_to_text(const MetricsReport& report);

}  // namespace clayer
