#include <clayer/error.hpp>
#include <clayer/orderings.hpp>
#include <algorithm>
#include <cmath>
#include <doctest.h>
#include <map>
#include <numeric>
#include <random>
#include <ranges>

#include "random_systems.hpp"

using namespace clayer;

namespace {

Dataset make(const FeatureSchema& schema, std::vector<std::vector<double>> columns) {
  const std::size_t rows = columns.front().size();
  std::vector<double> values;
  for (std::size_t r = 0; r < rows; ++r) {
    for (const auto& c : columns) values.push_back(c[r]);
  }
  return Dataset(schema, std::move(values));
}

std::map<std::size_t, double> by_column(const OrderingScores& s) {
  return {s.scores.begin(), s.scores.end()};
}

// Textbook form, kept apart from the library's centred sums on purpose.
double naive_pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double sa = 0, sb = 0, sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sa += a[i];
    sb += b[i];
    sab += a[i] * b[i];
    saa += a[i] * a[i];
    sbb += b[i] * b[i];
  }
  const double cov = sab / n - (sa / n) * (sb / n);
  const double va = saa / n - (sa / n) * (sa / n);
  const double vb = sbb / n - (sb / n) * (sb / n);
  return cov / std::sqrt(va * vb);
}

std::vector<std::vector<double>> random_columns(std::mt19937_64& rng, std::size_t d, std::size_t n) {
  std::normal_distribution<double> g;
  std::vector<std::vector<double>> cols(d, std::vector<double>(n));
  for (std::size_t r = 0; r < n; ++r) {
    const double shared = g(rng);
    for (std::size_t k = 0; k < d; ++k) cols[k][r] = shared * static_cast<double>(k) + g(rng);
  }
  return cols;
}

}  // namespace

TEST_CASE("random ordering is deterministic and covers every feature") {
  const auto schema = testing::numbered_schema(6);
  CHECK(random_ordering(schema, 42).columns() == random_ordering(schema, 42).columns());
  auto cols = random_ordering(schema, 7).columns();
  std::sort(cols.begin(), cols.end());
  CHECK(cols == std::vector<std::size_t>{0, 1, 2, 3, 4, 5});
  CHECK(random_ordering(testing::numbered_schema(1), 3).columns() == std::vector<std::size_t>{0});
  const FeatureSchema mixed({{"a", FeatureKind::categorical}, {"b", FeatureKind::continuous}});
  CHECK(random_ordering(mixed, 1).columns() == std::vector<std::size_t>{1});
}

TEST_CASE("random orderings are uniform over permutations") {
  const auto schema = testing::numbered_schema(5);
  std::map<std::vector<std::size_t>, int> counts;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) ++counts[random_ordering(schema, seed).columns()];
  const double expected = 1000.0 / 120.0;
  double chi2 = 0;
  for (const auto& [perm, n] : counts) chi2 += (n - expected) * (n - expected) / expected;
  chi2 += static_cast<double>(120 - counts.size()) * expected;
  // 99th percentile of chi-square with 119 degrees of freedom.
  CHECK(chi2 < 157.8);
}

TEST_CASE("pearson against the textbook formula") {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 50; ++i) {
    const auto c = random_columns(rng, 2, 30);
    CHECK(pearson(c[0], c[1]) == doctest::Approx(naive_pearson(c[0], c[1])).epsilon(1e-9));
  }
  const std::vector<double> flat{2, 2, 2};
  const std::vector<double> other{1, 2, 3};
  CHECK(pearson(flat, other) == 0);
}

TEST_CASE("correlation ordering on hand-sized data") {
  const auto schema = testing::numbered_schema(3);
  // real: x2 = 2*x1 exactly, x3 unrelated. synth keeps x1/x2 but x3 tracks x1.
  const auto real = make(schema, {{1, 2, 3, 4}, {2, 4, 6, 8}, {1, -1, -1, 1}});
  const auto synth = make(schema, {{1, 2, 3, 4}, {2, 4, 6, 8}, {1, 2, 3, 4}});
  const auto result = corr_ordering(real, synth);
  const auto s = by_column(result.scores);
  // Correlations: real r12 = 1, r13 = 0, r23 = 0; synth all 1.
  CHECK(s.at(0) == doctest::Approx(1.0));
  CHECK(s.at(1) == doctest::Approx(1.0));
  CHECK(s.at(2) == doctest::Approx(2.0));
  CHECK(result.ordering.columns() == std::vector<std::size_t>{0, 1, 2});

  std::mt19937_64 rng(10);
  for (int i = 0; i < 20; ++i) {
    const auto a = random_columns(rng, 4, 25);
    const auto b = random_columns(rng, 4, 25);
    const auto sch = testing::numbered_schema(4);
    const auto scores = by_column(corr_ordering(make(sch, a), make(sch, b)).scores);
    for (std::size_t k = 0; k < 4; ++k) {
      double ra = 0, rb = 0;
      for (std::size_t j = 0; j < 4; ++j) {
        if (j == k) continue;
        ra += naive_pearson(a[k], a[j]);
        rb += naive_pearson(b[k], b[j]);
      }
      CHECK(scores.at(k) == doctest::Approx(std::fabs(ra - rb)).epsilon(1e-9));
    }
  }
}

TEST_CASE("correlation ordering invariances") {
  std::mt19937_64 rng(12);
  const auto schema = testing::numbered_schema(4);
  const auto a = random_columns(rng, 4, 40);
  auto b = random_columns(rng, 4, 40);
  const auto base = corr_ordering(make(schema, a), make(schema, b));
  CHECK(corr_ordering(make(schema, a), make(schema, a)).ordering.columns() ==
        std::vector<std::size_t>{0, 1, 2, 3});
  const auto same = by_column(corr_ordering(make(schema, a), make(schema, a)).scores);
  for (double s : same | std::views::values) CHECK(s == 0);
  auto scaled = b;
  for (double& v : scaled[2]) v *= 7.5;
  const auto after_scale = corr_ordering(make(schema, a), make(schema, scaled));
  CHECK(after_scale.ordering.columns() == base.ordering.columns());
  auto shuffled = b;
  std::vector<std::size_t> perm(40);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  for (auto& col : shuffled) {
    std::vector<double> c(40);
    for (std::size_t r = 0; r < 40; ++r) c[r] = col[perm[r]];
    col = c;
  }
  const auto s0 = by_column(base.scores);
  const auto s1 = by_column(corr_ordering(make(schema, a), make(schema, shuffled)).scores);
  for (std::size_t k = 0; k < 4; ++k) CHECK(s1.at(k) == doctest::Approx(s0.at(k)).epsilon(1e-12));
  CHECK_THROWS_AS(corr_ordering(make(schema, {{1}, {1}, {1}, {1}}), make(schema, b)), Error);
}

TEST_CASE("kde ordering against a direct computation") {
  const auto schema = testing::numbered_schema(2);
  // x1 is identical in both corpora, x2 is shifted.
  const auto real = make(schema, {{0, 1, 2, 3, 4}, {0, 1, 2, 3, 4}});
  const auto synth = make(schema, {{0, 1, 2, 3, 4}, {1, 2, 3, 4, 5}});
  const double h = 0.8;
  const auto result = kde_ordering(real, synth, KdeBandwidth::fixed(h));
  CHECK(result.ordering.columns() == std::vector<std::size_t>{0, 1});

  // Plain densities (no log-space tricks), normalised per corpus.
  auto density = [&](double a, double b) {
    double sum = 0;
    for (std::size_t r = 0; r < real.rows(); ++r) {
      const double za = (a - real.value(r, 0)) / h;
      const double zb = (b - real.value(r, 1)) / h;
      sum += std::exp(-0.5 * (za * za + zb * zb));
    }
    return sum;
  };
  auto weights = [&](const Dataset& d) {
    std::vector<double> w;
    for (std::size_t r = 0; r < d.rows(); ++r) w.push_back(density(d.value(r, 0), d.value(r, 1)));
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    for (double& v : w) v /= total;
    return w;
  };
  const auto wr = weights(real);
  const auto ws = weights(synth);
  const auto scores = by_column(result.scores);
  for (std::size_t c = 0; c < 2; ++c) {
    std::map<double, std::pair<double, double>> m;
    for (std::size_t r = 0; r < 5; ++r) {
      m[real.value(r, c)].first += wr[r];
      m[synth.value(r, c)].second += ws[r];
    }
    const double norm = 1 + kKdeSmoothing * static_cast<double>(m.size());
    double kl = 0;
    for (const auto& [v, pq] : m) {
      const double p = (pq.first + kKdeSmoothing) / norm;
      const double q = (pq.second + kKdeSmoothing) / norm;
      kl += p * std::log(p / q);
    }
    CHECK(scores.at(c) == doctest::Approx(kl).epsilon(1e-9));
  }
  // x1's marginal still moves a little: the row weights follow the shift in x2.
  CHECK(scores.at(0) < scores.at(1));
}

TEST_CASE("kde ordering edge cases") {
  const auto schema = testing::numbered_schema(3);
  std::mt19937_64 rng(2);
  const auto a = make(schema, random_columns(rng, 3, 20));
  const auto same = by_column(kde_ordering(a, a).scores);
  for (double s : same | std::views::values) CHECK(s < 1e-12);
  CHECK(kde_ordering(a, a).ordering.columns() == std::vector<std::size_t>{0, 1, 2});
  const auto b = make(schema, random_columns(rng, 3, 20));
  CHECK(kde_ordering(a, b, KdeBandwidth::fixed(0.3)).ordering.columns().size() == 3);
  CHECK(kde_ordering(a, b).ordering.columns().size() == 3);
  CHECK_THROWS_AS(KdeBandwidth::fixed(0), Error);
  CHECK_THROWS_AS(kde_ordering(Dataset(schema, {}), b), Error);
  // Scott's rule: sigma * n^(-1/(d+4)).
  const auto bw = kde_bandwidths(a, KdeBandwidth::scott());
  const auto col = a.column(1);
  const double mean = std::accumulate(col.begin(), col.end(), 0.0) / 20;
  double ss = 0;
  for (double v : col) ss += (v - mean) * (v - mean);
  CHECK(bw[1] == doctest::Approx(std::sqrt(ss / 19) * std::pow(20.0, -1.0 / 7)));
}

TEST_CASE("wasserstein distance against quantile differences") {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> g;
  for (int i = 0; i < 40; ++i) {
    // Sizes 3k and 2k share a grid of 6k equal-mass quantile cells.
    const std::size_t k = 1 + rng() % 8;
    std::vector<double> a(3 * k), b(2 * k);
    for (double& v : a) v = g(rng);
    for (double& v : b) v = 2 * g(rng) + 0.5;
    auto sa = a, sb = b;
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    double oracle = 0;
    const std::size_t cells = 6 * k;
    for (std::size_t c = 0; c < cells; ++c) oracle += std::fabs(sa[c / 2] - sb[c / 3]) / static_cast<double>(cells);
    CHECK(wasserstein_1d(a, b) == doctest::Approx(oracle).epsilon(1e-12));
  }
  std::vector<double> a{1, 5, 2, 8};
  auto shifted = a;
  for (double& v : shifted) v -= 2.5;
  CHECK(wasserstein_1d(a, shifted) == doctest::Approx(2.5));
  CHECK(wasserstein_1d(a, a) == 0);
  CHECK_THROWS_AS(wasserstein_1d({}, a), Error);
}

TEST_CASE("wasserstein ordering shifts exactly one score") {
  std::mt19937_64 rng(8);
  const auto schema = testing::numbered_schema(3);
  const auto a = random_columns(rng, 3, 30);
  auto b = random_columns(rng, 3, 30);
  const auto base = by_column(wasserstein_ordering(make(schema, a), make(schema, b)).scores);
  auto far = a;
  for (double& v : far[1]) v += 100;
  const auto moved = wasserstein_ordering(make(schema, a), make(schema, far));
  CHECK(by_column(moved.scores).at(1) == doctest::Approx(100));
  CHECK(by_column(moved.scores).at(0) == 0);
  CHECK(moved.ordering.columns() == std::vector<std::size_t>{0, 2, 1});
  CHECK(base.size() == 3);
}

TEST_CASE("ordering file round trip") {
  const FeatureSchema schema({{"a", FeatureKind::continuous},
                              {"g", FeatureKind::categorical},
                              {"b", FeatureKind::continuous},
                              {"c", FeatureKind::continuous}});
  const VariableOrdering ordering(schema, {3, 0, 2});
  const auto text = format_ordering_file(ordering, schema);
  CHECK(text == "c\na\nb\ng\n");
  CHECK(parse_ordering_file(text, schema).columns() == ordering.columns());
  CHECK(parse_ordering_file("# ranks\n  b \n\na\nc # last\n", schema).columns() ==
        std::vector<std::size_t>{2, 0, 3});
  CHECK_THROWS_AS(parse_ordering_file("a\nzz\n", schema), Error);
  CHECK_THROWS_AS(parse_ordering_file("a\na\n", schema), Error);
}
