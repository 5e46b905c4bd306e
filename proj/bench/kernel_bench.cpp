// Serial reference vs OpenMP kernels on report-scale inputs.
//   ./kernel_bench --benchmark_filter=Cooccurrence

#include <benchmark/benchmark.h>

#include <random>

#include "streetsafe/kernels.hpp"

namespace k = streetsafe::kernels;
using streetsafe::Label;

namespace {

// One keyword set per Unsafe assessment at full scale is ~1.5M images; this
// keeps the shape (3 keywords, top-25 vocabulary) at a bench-friendly size.
k::IndexSets keyword_sets(std::size_t images, std::size_t vocab) {
  std::mt19937_64 rng(1);
  k::IndexSets sets(images);
  for (auto& s : sets) {
    for (int j = 0; j < 3; ++j) s.push_back(static_cast<std::uint32_t>(rng() % vocab));
  }
  return sets;
}

std::vector<double> points(std::size_t n, std::size_t dim) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g(30, 10);
  std::vector<double> x(n * dim);
  for (double& v : x) v = g(rng);
  return x;
}

template <auto Fn>
void BM_Cooccurrence(benchmark::State& state) {
  auto sets = keyword_sets(static_cast<std::size_t>(state.range(0)), 25);
  for (auto _ : state) benchmark::DoNotOptimize(Fn(sets, 25));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <auto Fn>
void BM_GroupCounts(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(3);
  std::vector<std::uint32_t> group(n);
  std::vector<std::uint8_t> flag(n);
  for (std::size_t i = 0; i < n; ++i) {
    group[i] = static_cast<std::uint32_t>(rng() % (38 * 56));
    flag[i] = rng() % 2;
  }
  for (auto _ : state) benchmark::DoNotOptimize(Fn(group, flag, 38 * 56));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <auto Fn>
void BM_Confusion(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(4);
  std::vector<Label> p(n), t(n);
  for (std::size_t i = 0; i < n; ++i) {
    p[i] = rng() % 2 ? Label::Safe : Label::Unsafe;
    t[i] = rng() % 2 ? Label::Safe : Label::Unsafe;
  }
  for (auto _ : state) benchmark::DoNotOptimize(Fn(p, t));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <auto Fn>
void BM_PairwiseDistances(benchmark::State& state) {
  auto x = points(static_cast<std::size_t>(state.range(0)), 2);
  for (auto _ : state) benchmark::DoNotOptimize(Fn(x, 2));
}

template <auto Fn>
void BM_CorrelationMatrix(benchmark::State& state) {
  // rows = personas, columns = cities
  auto x = points(static_cast<std::size_t>(state.range(0)), 56);
  for (auto _ : state) benchmark::DoNotOptimize(Fn(x, 56));
}

}  // namespace

BENCHMARK(BM_Cooccurrence<k::serial::cooccurrence>)->Arg(1 << 16)->Arg(1 << 20);
BENCHMARK(BM_Cooccurrence<k::omp::cooccurrence>)->Arg(1 << 16)->Arg(1 << 20);
BENCHMARK(BM_GroupCounts<k::serial::group_counts>)->Arg(1 << 20)->Arg(1 << 22);
BENCHMARK(BM_GroupCounts<k::omp::group_counts>)->Arg(1 << 20)->Arg(1 << 22);
BENCHMARK(BM_Confusion<k::serial::confusion>)->Arg(1 << 20);
BENCHMARK(BM_Confusion<k::omp::confusion>)->Arg(1 << 20);
BENCHMARK(BM_PairwiseDistances<k::serial::pairwise_sq_distances>)->Arg(56)->Arg(1024);
BENCHMARK(BM_PairwiseDistances<k::omp::pairwise_sq_distances>)->Arg(56)->Arg(1024);
BENCHMARK(BM_CorrelationMatrix<k::serial::correlation_matrix>)->Arg(38)->Arg(512);
BENCHMARK(BM_CorrelationMatrix<k::omp::correlation_matrix>)->Arg(38)->Arg(512);

BENCHMARK_MAIN();
