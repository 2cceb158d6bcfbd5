#include <benchmark/benchmark.h>

#include <numbers>

#include "qhsvm/data_io.hpp"
#include "qhsvm/feature_map.hpp"
#include "qhsvm/feature_select.hpp"
#include "qhsvm/kernel.hpp"
#include "qhsvm/ocsvm.hpp"
#include "qhsvm/rng.hpp"

namespace {

qhsvm::Matrix random_points(std::size_t n, std::size_t d, std::uint64_t seed) {
  qhsvm::Rng rng(seed);
  qhsvm::Matrix m(n, d);
  for (auto& v : m.data()) v = rng.uniform() * std::numbers::pi;
  return m;
}

// Args: rows, workers.
void BM_GramExact(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto x = random_points(n, 12, 1);
  const qhsvm::QuantumExactKernel kernel(qhsvm::FeatureMapSpec::dense(12));
  const qhsvm::FillOptions options{.workers = static_cast<unsigned>(state.range(1))};
  for (auto _ : state) benchmark::DoNotOptimize(qhsvm::gram_train(kernel, x, options));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * (n + 1) / 2));
}
BENCHMARK(BM_GramExact)
    ->Args({500, 1})
    ->Args({500, 4})
    ->Args({2000, 1})
    ->Args({2000, 4})
    ->Unit(benchmark::kMillisecond)
    ->UseRealTime();

void BM_GramSampled(benchmark::State& state) {
  const auto x = random_points(100, 12, 2);
  const qhsvm::QuantumSampledKernel kernel(qhsvm::FeatureMapSpec::dense(12),
                                           static_cast<std::uint64_t>(state.range(0)), 3);
  for (auto _ : state) benchmark::DoNotOptimize(qhsvm::gram_train(kernel, x));
}
BENCHMARK(BM_GramSampled)->Arg(1024)->Arg(8192)->Unit(benchmark::kMillisecond);

void BM_OcsvmFit(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto x = random_points(n, 8, 4);
  const auto k = qhsvm::gram_train(qhsvm::QuantumExactKernel(qhsvm::FeatureMapSpec::dense(8)), x);
  for (auto _ : state) benchmark::DoNotOptimize(qhsvm::fit(k, {.nu = 0.1}));
}
BENCHMARK(BM_OcsvmFit)->Arg(200)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_FitTree(benchmark::State& state) {
  qhsvm::SyntheticParams p;
  p.kind = qhsvm::SyntheticKind::PlantedFeatures;
  p.dims = static_cast<std::size_t>(state.range(0));
  p.planted_k = 8;
  p.separation = 1.0;
  p.seed = 5;
  const auto table = qhsvm::generate_synthetic(p);
  std::vector<qhsvm::ClassLabel> y;
  for (auto l : table.labels) y.push_back(static_cast<qhsvm::ClassLabel>(l));
  for (auto _ : state) benchmark::DoNotOptimize(qhsvm::fit_tree(table.rows, y));
}
BENCHMARK(BM_FitTree)->Arg(20)->Arg(60)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
