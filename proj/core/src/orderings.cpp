#include "clayer/orderings.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <spdlog/spdlog.h>

namespace clayer {

namespace {

void require_same_schema(const Dataset& real, const Dataset& synth) {
  if (!(real.schema() == synth.schema())) {
    throw Error(ErrorKind::schema_mismatch, "real and synthetic datasets have different schemas");
  }
}

void require_rows(const Dataset& data, std::size_t minimum, std::string_view what) {
  if (data.rows() < minimum) {
    throw Error(ErrorKind::empty_dataset, std::string(what) + " dataset needs at least " +
                                              std::to_string(minimum) + " row(s)");
  }
}

double log_sum_exp(std::span<const double> values) {
  double peak = -std::numeric_limits<double>::infinity();
  for (double v : values) peak = std::max(peak, v);
  if (!std::isfinite(peak)) return peak;
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - peak);
  return peak + std::log(sum);
}

double sample_stddev(std::span<const double> values) {
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / (n - 1.0));
}

class KernelDensity {
 public:
  KernelDensity(const Dataset& real, std::vector<std::size_t> columns, std::vector<double> bandwidth)
      : columns_(std::move(columns)), bandwidth_(std::move(bandwidth)) {
    points_.reserve(real.rows() * columns_.size());
    for (std::size_t r = 0; r < real.rows(); ++r) {
      for (std::size_t c : columns_) points_.push_back(real.value(r, c));
    }
    rows_ = real.rows();
    normalizer_ = -std::log(static_cast<double>(rows_));
    for (double h : bandwidth_) normalizer_ -= std::log(h * std::sqrt(2.0 * M_PI));
  }

  double log_density(std::span<const double> row) const {
    const std::size_t d = columns_.size();
    std::vector<double> exponents(rows_);
    for (std::size_t r = 0; r < rows_; ++r) {
      double q = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double z = (row[columns_[k]] - points_[r * d + k]) / bandwidth_[k];
        q += z * z;
      }
      exponents[r] = -0.5 * q;
    }
    return log_sum_exp(exponents) + normalizer_;
  }

 private:
  std::vector<std::size_t> columns_;
  std::vector<double> bandwidth_;
  std::vector<double> points_;
  std::size_t rows_ = 0;
  double normalizer_ = 0.0;
};

std::vector<double> corpus_probabilities(const KernelDensity& kde, const Dataset& data) {
  std::vector<double> log_scores(data.rows());
  for (std::size_t r = 0; r < data.rows(); ++r) log_scores[r] = kde.log_density(data.row(r));
  const double total = log_sum_exp(log_scores);
  for (double& s : log_scores) s = std::exp(s - total);
  return log_scores;
}

}  // namespace

VariableOrdering ordering_from_scores(const FeatureSchema& schema, const OrderingScores& scores) {
  auto ranked = scores.scores;
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second < b.second; });
  std::vector<std::size_t> columns;
  columns.reserve(ranked.size());
  for (const auto& [column, score] : ranked) columns.push_back(column);
  return VariableOrdering(schema, std::move(columns));
}

VariableOrdering random_ordering(const FeatureSchema& schema, std::uint64_t seed) {
  std::mt19937_64 engine(seed);
  auto bounded = [&engine](std::uint64_t n) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do {
      x = engine();
    } while (x >= limit);
    return x % n;
  };
  std::vector<std::size_t> columns = schema.continuous_columns();
  for (std::size_t i = columns.size(); i > 1; --i) {
    std::swap(columns[i - 1], columns[bounded(i)]);
  }
  return VariableOrdering(schema, std::move(columns));
}

double pearson(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size();
  const double mean_a = std::accumulate(a.begin(), a.end(), 0.0) / static_cast<double>(n);
  const double mean_b = std::accumulate(b.begin(), b.end(), 0.0) / static_cast<double>(n);
  double sab = 0.0;
  double saa = 0.0;
  double sbb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double da = a[i] - mean_a;
    const double db = b[i] - mean_b;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

OrderingResult corr_ordering(const Dataset& real, const Dataset& synth) {
  require_same_schema(real, synth);
  require_rows(real, 2, "real");
  require_rows(synth, 2, "synthetic");
  const FeatureSchema& schema = real.schema();
  const auto columns = schema.continuous_columns();

  auto correlation_sums = [&](const Dataset& data, std::string_view which) {
    std::vector<std::vector<double>> cols;
    for (std::size_t c : columns) {
      cols.push_back(data.column(c));
      const auto [lo, hi] = std::minmax_element(cols.back().begin(), cols.back().end());
      if (*lo == *hi) {
        spdlog::warn("{} column '{}' is constant; its correlations count as 0", which,
                     schema[c].name);
      }
    }
    std::vector<double> sums(columns.size(), 0.0);
    for (std::size_t i = 0; i < columns.size(); ++i) {
      for (std::size_t j = i + 1; j < columns.size(); ++j) {
        const double r = pearson(cols[i], cols[j]);
        sums[i] += r;
        sums[j] += r;
      }
    }
    return sums;
  };

  const auto real_sums = correlation_sums(real, "real");
  const auto synth_sums = correlation_sums(synth, "synthetic");
  OrderingScores scores{"corr", {}};
  for (std::size_t i = 0; i < columns.size(); ++i) {
    scores.scores.emplace_back(columns[i], std::fabs(real_sums[i] - synth_sums[i]));
  }
  return {ordering_from_scores(schema, scores), std::move(scores)};
}

KdeBandwidth KdeBandwidth::fixed(double h) {
  if (!(h > 0.0) || !std::isfinite(h)) {
    throw Error(ErrorKind::invalid_argument, "KDE bandwidth must be positive");
  }
  return {Kind::fixed, h};
}

std::vector<double> kde_bandwidths(const Dataset& real, KdeBandwidth bandwidth) {
  const auto columns = real.schema().continuous_columns();
  if (bandwidth.kind == KdeBandwidth::Kind::fixed) {
    return std::vector<double>(columns.size(), bandwidth.value);
  }
  // Scott's rule, per dimension: sigma_k * n^(-1 / (d + 4)).
  const double n = static_cast<double>(real.rows());
  const double factor = std::pow(n, -1.0 / (static_cast<double>(columns.size()) + 4.0));
  std::vector<double> out;
  for (std::size_t c : columns) {
    const auto values = real.column(c);
    double sigma = real.rows() > 1 ? sample_stddev(values) : 0.0;
    if (!(sigma > 0.0)) sigma = 1.0;
    out.push_back(sigma * factor);
  }
  return out;
}

OrderingResult kde_ordering(const Dataset& real, const Dataset& synth, KdeBandwidth bandwidth) {
  require_same_schema(real, synth);
  require_rows(real, 1, "real");
  require_rows(synth, 1, "synthetic");
  const FeatureSchema& schema = real.schema();
  const auto columns = schema.continuous_columns();

  const KernelDensity kde(real, columns, kde_bandwidths(real, bandwidth));
  const auto p_real = corpus_probabilities(kde, real);
  const auto p_synth = corpus_probabilities(kde, synth);

  OrderingScores scores{"kde", {}};
  for (std::size_t c : columns) {
    std::map<double, std::pair<double, double>> marginal;
    for (std::size_t r = 0; r < real.rows(); ++r) marginal[real.value(r, c)].first += p_real[r];
    for (std::size_t r = 0; r < synth.rows(); ++r) marginal[synth.value(r, c)].second += p_synth[r];
    const double support = static_cast<double>(marginal.size());
    const double norm = 1.0 + kKdeSmoothing * support;
    double kl = 0.0;
    for (const auto& [value, masses] : marginal) {
      const double p = (masses.first + kKdeSmoothing) / norm;
      const double q = (masses.second + kKdeSmoothing) / norm;
      kl += p * std::log(p / q);
    }
    scores.scores.emplace_back(c, std::max(0.0, kl));
  }
  return {ordering_from_scores(schema, scores), std::move(scores)};
}

double wasserstein_1d(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) {
    throw Error(ErrorKind::empty_dataset, "Wasserstein distance needs non-empty samples");
  }
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  // Integrate |F_a - F_b| over the merged breakpoints.
  std::size_t i = 0;
  std::size_t j = 0;
  double previous = std::min(a.front(), b.front());
  double total = 0.0;
  while (i < a.size() || j < b.size()) {
    const double next = (j == b.size() || (i < a.size() && a[i] <= b[j])) ? a[i] : b[j];
    const double gap = std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb);
    total += gap * (next - previous);
    while (i < a.size() && a[i] == next) ++i;
    while (j < b.size() && b[j] == next) ++j;
    previous = next;
  }
  return total;
}

OrderingResult wasserstein_ordering(const Dataset& real, const Dataset& synth) {
  require_same_schema(real, synth);
  require_rows(real, 1, "real");
  require_rows(synth, 1, "synthetic");
  OrderingScores scores{"wasserstein", {}};
  for (std::size_t c : real.schema().continuous_columns()) {
    scores.scores.emplace_back(c, wasserstein_1d(real.column(c), synth.column(c)));
  }
  return {ordering_from_scores(real.schema(), scores), std::move(scores)};
}

std::string format_ordering_file(const VariableOrdering& ordering, const FeatureSchema& schema) {
  std::string out;
  for (std::size_t column : ordering.columns()) out += schema[column].name + "\n";
  for (std::size_t column : schema.categorical_columns()) out += schema[column].name + "\n";
  return out;
}

VariableOrdering parse_ordering_file(std::string_view text, const FeatureSchema& schema) {
  std::vector<std::string> names;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r");
    names.push_back(line.substr(first, last - first + 1));
  }
  return VariableOrdering::from_names(schema, names);
}

}  // namespace clayer
