#include "clayer/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "clayer/error.hpp"
#include "clayer/orderings.hpp"
#include "clayer/parser.hpp"

namespace clayer {

namespace {

void require_rows(const Dataset& data) {
  if (data.rows() == 0) throw Error(ErrorKind::empty_dataset, "dataset has no rows");
}

void require_constraints(const ConstraintSet& constraints) {
  if (constraints.empty()) {
    throw Error(ErrorKind::empty_constraint_set, "constraint set is empty");
  }
}

double percent(std::size_t part, std::size_t whole) {
  return 100.0 * static_cast<double>(part) / static_cast<double>(whole);
}

}  // namespace

double cvr(const Dataset& data, const ConstraintSet& constraints, double slack) {
  require_rows(data);
  std::size_t violating = 0;
  for (std::size_t r = 0; r < data.rows(); ++r) {
    if (!constraints.satisfied_by(data.row(r), slack)) ++violating;
  }
  return percent(violating, data.rows());
}

std::vector<std::size_t> violation_counts(const Dataset& data, const ConstraintSet& constraints,
                                          double slack) {
  std::vector<std::size_t> counts(constraints.size(), 0);
  for (std::size_t r = 0; r < data.rows(); ++r) {
    const auto row = data.row(r);
    for (std::size_t i = 0; i < constraints.size(); ++i) {
      if (constraints[i].violated_by(row, slack)) ++counts[i];
    }
  }
  return counts;
}

double cvc(const Dataset& data, const ConstraintSet& constraints, double slack) {
  require_constraints(constraints);
  const auto counts = violation_counts(data, constraints, slack);
  const auto violated = static_cast<std::size_t>(
      std::count_if(counts.begin(), counts.end(), [](std::size_t n) { return n > 0; }));
  return percent(violated, constraints.size());
}

double scvc(const Dataset& data, const ConstraintSet& constraints, double slack) {
  require_rows(data);
  require_constraints(constraints);
  double total = 0.0;
  for (std::size_t r = 0; r < data.rows(); ++r) {
    const auto row = data.row(r);
    std::size_t violated = 0;
    for (const auto& c : constraints) {
      if (c.violated_by(row, slack)) ++violated;
    }
    total += percent(violated, constraints.size());
  }
  return total / static_cast<double>(data.rows());
}

double column_range(const Dataset& data, std::size_t column) {
  require_rows(data);
  const auto values = data.column(column);
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  return *hi - *lo;
}

double boundary_rate(const Dataset& data, const LinearConstraint& constraint, double p,
                     std::pair<double, double> ranges) {
  if (constraint.terms().size() != 2) {
    throw Error(ErrorKind::not_two_variable, "boundary band needs a two-feature constraint");
  }
  require_rows(data);
  const double w1 = constraint.terms()[0].weight;
  const double w2 = constraint.terms()[1].weight;
  const double norm = std::hypot(w1, w2);
  const double width = std::hypot(ranges.first * p, ranges.second * p);
  std::size_t inside = 0;
  for (std::size_t r = 0; r < data.rows(); ++r) {
    const double distance = std::fabs(constraint.evaluate(data.row(r))) / norm;
    if (distance <= width / 2) ++inside;
  }
  return percent(inside, data.rows());
}

std::map<std::string, double> wasserstein_per_feature(const Dataset& real, const Dataset& synth) {
  // Same scores the Wasserstein ordering ranks by.
  const auto result = wasserstein_ordering(real, synth);
  std::map<std::string, double> out;
  for (const auto& [column, score] : result.scores.scores) out[real.schema()[column].name] = score;
  return out;
}

double jensen_shannon(std::span<const double> p, std::span<const double> q) {
  auto kl_to_mid = [](double a, double m) { return a > 0.0 ? a * std::log2(a / m) : 0.0; };
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double m = 0.5 * (p[i] + q[i]);
    total += 0.5 * kl_to_mid(p[i], m) + 0.5 * kl_to_mid(q[i], m);
  }
  return std::clamp(total, 0.0, 1.0);
}

std::map<std::string, double> jsd_per_feature(const Dataset& real, const Dataset& synth) {
  if (!(real.schema() == synth.schema())) {
    throw Error(ErrorKind::schema_mismatch, "real and synthetic datasets have different schemas");
  }
  const auto columns = real.schema().categorical_columns();
  if (columns.empty()) {
    throw Error(ErrorKind::no_categorical_features, "schema has no categorical features");
  }
  require_rows(real);
  require_rows(synth);
  std::map<std::string, double> out;
  for (std::size_t c : columns) {
    std::map<std::string, std::pair<double, double>> counts;
    for (std::size_t r = 0; r < real.rows(); ++r) counts[real.label(r, c)].first += 1.0;
    for (std::size_t r = 0; r < synth.rows(); ++r) counts[synth.label(r, c)].second += 1.0;
    std::vector<double> p;
    std::vector<double> q;
    for (const auto& [label, n] : counts) {
      p.push_back(n.first / static_cast<double>(real.rows()));
      q.push_back(n.second / static_cast<double>(synth.rows()));
    }
    out[real.schema()[c].name] = jensen_shannon(p, q);
  }
  return out;
}

MetricsReport build_report(const Dataset& data, const ConstraintSet& constraints,
                           const Dataset* real, const ReportOptions& options) {
  MetricsReport report;
  report.model_label = options.model_label;
  report.dataset_label = options.dataset_label;
  report.rows = data.rows();
  report.cvr = cvr(data, constraints, options.slack);
  if (!constraints.empty()) {
    report.cvc = cvc(data, constraints, options.slack);
    report.scvc = scvc(data, constraints, options.slack);
  }
  const auto counts = violation_counts(data, constraints, options.slack);
  for (std::size_t i = 0; i < constraints.size(); ++i) {
    report.per_constraint_violations.emplace_back(
        format_constraint(constraints[i], constraints.schema()), counts[i]);
  }
  const Dataset& range_source = real ? *real : data;
  for (const auto& c : constraints) {
    if (c.terms().size() != 2) continue;
    const std::pair<double, double> ranges{column_range(range_source, c.terms()[0].column),
                                           column_range(range_source, c.terms()[1].column)};
    for (double p : options.boundary_p) {
      report.boundary.push_back(
          {format_constraint(c, constraints.schema()), p, boundary_rate(data, c, p, ranges)});
    }
  }
  if (real) {
    if (!data.schema().continuous_columns().empty()) {
      report.wasserstein = wasserstein_per_feature(*real, data);
    }
    if (!data.schema().categorical_columns().empty()) {
      report.jsd = jsd_per_feature(*real, data);
    }
  }
  return report;
}

nlohmann::json report_to_json(const MetricsReport& report) {
  nlohmann::json out = {{"model", report.model_label},
                        {"dataset", report.dataset_label},
                        {"rows", report.rows},
                        {"cvr", report.cvr},
                        {"cvc", report.cvc},
                        {"scvc", report.scvc}};
  nlohmann::json per = nlohmann::json::array();
  for (const auto& [text, count] : report.per_constraint_violations) {
    per.push_back({{"constraint", text}, {"violations", count}});
  }
  out["per_constraint_violations"] = std::move(per);
  if (!report.boundary.empty()) {
    nlohmann::json band = nlohmann::json::array();
    for (const auto& b : report.boundary) {
      band.push_back({{"constraint", b.constraint}, {"p", b.p}, {"rate", b.rate}});
    }
    out["boundary"] = std::move(band);
  }
  if (report.wasserstein) out["wasserstein"] = *report.wasserstein;
  if (report.jsd) out["jsd"] = *report.jsd;
  return out;
}

std::string report_to_text(const MetricsReport& report) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(2);
  const std::string model = report.model_label.empty() ? "-" : report.model_label;
  const std::string dataset = report.dataset_label.empty() ? "-" : report.dataset_label;
  const std::size_t model_width = std::max<std::size_t>(14, model.size() + 2);
  const std::size_t dataset_width = std::max<std::size_t>(10, dataset.size() + 2);
  out << std::left << std::setw(static_cast<int>(model_width)) << "Model"
      << std::setw(static_cast<int>(dataset_width)) << "Dataset" << std::right << std::setw(10)
      << "Rows" << std::setw(10) << "CVR" << std::setw(10) << "CVC" << std::setw(10) << "sCVC"
      << '\n';
  out << std::left << std::setw(static_cast<int>(model_width)) << model
      << std::setw(static_cast<int>(dataset_width)) << dataset << std::right << std::setw(10)
      << report.rows << std::setw(10) << report.cvr << std::setw(10) << report.cvc
      << std::setw(10) << report.scvc << '\n';

  if (!report.per_constraint_violations.empty()) {
    out << "\nViolations per constraint\n";
    for (const auto& [text, count] : report.per_constraint_violations) {
      out << std::right << std::setw(10) << count << "  " << text << '\n';
    }
  }
  if (!report.boundary.empty()) {
    out << "\nBoundary band population (%)\n";
    for (const auto& b : report.boundary) {
      out << "  p=" << std::setw(6) << b.p * 100.0 << "%" << std::setw(10) << b.rate << "  "
          << b.constraint << '\n';
    }
  }
  auto section = [&out](const std::string& title, const std::map<std::string, double>& values) {
    out << '\n' << title << '\n';
    std::size_t width = 8;
    for (const auto& [name, v] : values) width = std::max(width, name.size() + 2);
    out << std::setprecision(4);
    for (const auto& [name, v] : values) {
      out << "  " << std::left << std::setw(static_cast<int>(width)) << name << std::right
          << std::setw(10) << v << '\n';
    }
    out << std::setprecision(2);
  };
  if (report.wasserstein) section("Wasserstein distance (continuous)", *report.wasserstein);
  if (report.jsd) section("Jensen-Shannon divergence (categorical)", *report.jsd);
  return out.str();
}

}  // namespace clayer
