#include <benchmark/benchmark.h>
#include <clayer/dataset.hpp>
#include <clayer/fm.hpp>
#include <clayer/orderings.hpp>
#include <clayer/parser.hpp>
#include <clayer/projection.hpp>
#include <random>
#include <string>

namespace {

using namespace clayer;

FeatureSchema numbered(std::size_t d) {
  std::vector<Feature> features;
  for (std::size_t i = 1; i <= d; ++i) features.push_back({"x" + std::to_string(i), FeatureKind::continuous});
  return FeatureSchema(std::move(features));
}

// A credit-scoring sized table: 29 features, 4 cross-feature rules.
constexpr const char* kRules =
    "x1 - x2 >= 0\n"
    "x3 + x4 <= 2*x5 + 10\n"
    "x6 > 0.5*x7\n"
    "x8 - x9 + x10 >= -3\n";

Dataset random_rows(const FeatureSchema& schema, std::size_t rows, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-10, 10);
  std::vector<double> values(rows * schema.size());
  for (double& v : values) v = u(rng);
  return Dataset(schema, std::move(values));
}

void BM_ApplyDataset(benchmark::State& state) {
  const auto schema = numbered(29);
  const auto layer = compile(parse_constraints(kRules, schema), VariableOrdering::natural(schema));
  const auto data = random_rows(schema, static_cast<std::size_t>(state.range(0)), 1);
  const unsigned threads = static_cast<unsigned>(state.range(1));
  for (auto _ : state) {
    benchmark::DoNotOptimize(apply_dataset(layer, data, {}, threads));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ApplyDataset)->Args({10000, 1})->Args({10000, 4})->UseRealTime()->Unit(benchmark::kMillisecond);

void BM_ApplySample(benchmark::State& state) {
  const auto schema = numbered(2);
  const auto layer = compile(parse_constraints("x1 - x2 >= 0\nx2 - 5 > 0\n", schema),
                             VariableOrdering::natural(schema));
  const std::vector<double> x{3, 3};
  for (auto _ : state) benchmark::DoNotOptimize(clayer::apply(layer, x));
}
BENCHMARK(BM_ApplySample);

void BM_Compile(benchmark::State& state) {
  const std::size_t d = static_cast<std::size_t>(state.range(0));
  const auto schema = numbered(d);
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> coef(-3, 3);
  std::string text;
  for (std::size_t c = 0; c < 2 * d; ++c) {
    for (std::size_t k = 1; k <= d; ++k) {
      const int w = coef(rng);
      if (w != 0) text += (w > 0 ? " + " : " - ") + std::to_string(std::abs(w)) + "*x" + std::to_string(k);
    }
    text += " >= -" + std::to_string(1 + c % 5) + "\n";
  }
  const auto set = parse_constraints(text, schema);
  for (auto _ : state) {
    try {
      benchmark::DoNotOptimize(compile(set, VariableOrdering::natural(schema)));
    } catch (const Error& e) {
      state.SkipWithError(e.what());
      break;
    }
  }
}
BENCHMARK(BM_Compile)->Arg(4)->Arg(6)->Unit(benchmark::kMillisecond);

void BM_Parse(benchmark::State& state) {
  const auto schema = numbered(29);
  for (auto _ : state) benchmark::DoNotOptimize(parse_constraints(kRules, schema));
}
BENCHMARK(BM_Parse);

}  // namespace
BENCHMARK_MAIN();
