#include <benchmark/benchmark.h>

#include "poac/kernels.hpp"
#include "poac/parallel.hpp"
#include "poac/rng.hpp"

using namespace poac;

namespace {

Matrix points(Eigen::Index n, Eigen::Index p) {
  RngStream rng(1, 2);
  Matrix x(n, p);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < p; ++j) x(i, j) = rng.normal();
  return x;
}

Partition stripes(Eigen::Index n, int k) {
  std::vector<int> a(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = static_cast<int>(i % static_cast<std::size_t>(k));
  return canonicalize(a);
}

void BM_PairwiseParallel(benchmark::State& state) {
  const auto x = points(state.range(0), 16);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::pairwise_distances(x));
}

void BM_PairwiseReference(benchmark::State& state) {
  const auto x = points(state.range(0), 16);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::reference::pairwise_distances(x));
}

void BM_SilhouetteParallel(benchmark::State& state) {
  const auto d = kernels::pairwise_distances(points(state.range(0), 8));
  const auto p = stripes(state.range(0), 5);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::silhouette_samples(d, p));
}

void BM_SilhouetteReference(benchmark::State& state) {
  const auto d = kernels::pairwise_distances(points(state.range(0), 8));
  const auto p = stripes(state.range(0), 5);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::reference::silhouette_samples(d, p));
}

void BM_AssignParallel(benchmark::State& state) {
  const auto x = points(state.range(0), 16);
  const Matrix c = points(20, 16);
  std::vector<int> labels(static_cast<std::size_t>(x.rows()));
  std::vector<double> sq(labels.size());
  for (auto _ : state) {
    kernels::assign_nearest(x, c, labels, sq);
    benchmark::DoNotOptimize(sq.data());
  }
}

void BM_AssignReference(benchmark::State& state) {
  const auto x = points(state.range(0), 16);
  const Matrix c = points(20, 16);
  std::vector<int> labels(static_cast<std::size_t>(x.rows()));
  std::vector<double> sq(labels.size());
  for (auto _ : state) {
    kernels::reference::assign_nearest(x, c, labels, sq);
    benchmark::DoNotOptimize(sq.data());
  }
}

void BM_RadiusParallel(benchmark::State& state) {
  const auto x = points(state.range(0), 4);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::radius_neighbors(x, 0.8));
}

void BM_RadiusReference(benchmark::State& state) {
  const auto x = points(state.range(0), 4);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::reference::radius_neighbors(x, 0.8));
}

}  // namespace

BENCHMARK(BM_PairwiseParallel)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PairwiseReference)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SilhouetteParallel)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SilhouetteReference)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AssignParallel)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AssignReference)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RadiusParallel)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RadiusReference)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
