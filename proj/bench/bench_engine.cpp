#include <random>

#include <benchmark/benchmark.h>

#include "frt/engine.hpp"

namespace {

frt::Dataset anova_data(int n) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> normal;
  std::vector<int> w;
  Eigen::MatrixXd y(3 * n, 1);
  for (int j = 0; j < 3; ++j)
    for (int i = 0; i < n; ++i) {
      w.push_back(j);
      y(j * n + i, 0) = (j + 1.0) * normal(rng);
    }
  return frt::make_dataset(w, y);
}

frt::Hypothesis anova_hypothesis() { return frt::make_hypothesis(frt::anova_contrast(3), Eigen::VectorXd::Zero(2)); }

void BM_Parallel(benchmark::State& state) {
  const auto data = anova_data(static_cast<int>(state.range(0)));
  const frt::RandomizationKernel kernel(data, anova_hypothesis(), frt::StatKind::X2);
  frt::FrtOptions opt;
  opt.draws = 10'000;
  opt.seed = 3;
  for (auto _ : state) benchmark::DoNotOptimize(frt::frt_pvalue(kernel, opt));
  state.SetItemsProcessed(state.iterations() * opt.draws);
}

void BM_Serial(benchmark::State& state) {
  const auto data = anova_data(static_cast<int>(state.range(0)));
  const frt::RandomizationKernel kernel(data, anova_hypothesis(), frt::StatKind::X2);
  frt::FrtOptions opt;
  opt.draws = 10'000;
  opt.seed = 3;
  opt.parallel = false;
  for (auto _ : state) benchmark::DoNotOptimize(frt::frt_pvalue(kernel, opt));
  state.SetItemsProcessed(state.iterations() * opt.draws);
}

void BM_Reference(benchmark::State& state) {
  const auto data = anova_data(static_cast<int>(state.range(0)));
  const auto h = anova_hypothesis();
  frt::FrtOptions opt;
  opt.draws = 10'000;
  opt.seed = 3;
  for (auto _ : state) benchmark::DoNotOptimize(frt::frt_pvalue_reference(data, h, frt::StatKind::X2, opt));
  state.SetItemsProcessed(state.iterations() * opt.draws);
}

}  // namespace

BENCHMARK(BM_Parallel)->Arg(40)->Arg(400)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Serial)->Arg(40)->Arg(400)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Reference)->Arg(40)->Arg(400)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
