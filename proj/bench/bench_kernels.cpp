// Serial reference kernels against their OpenMP variants.
#include <benchmark/benchmark.h>

#include <numeric>
#include <vector>

#include "pact/kernels.hpp"
#include "pact/rng.hpp"

namespace k = pact::kernels;

namespace {

std::vector<double> gaussian(std::size_t n, std::uint64_t seed) {
  pact::Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.gaussian();
  return v;
}

std::vector<std::uint32_t> identityRank(std::size_t n) {
  std::vector<std::uint32_t> r(n);
  std::iota(r.begin(), r.end(), 0u);
  return r;
}

template <auto Kernel>
void scoreAll(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  constexpr std::size_t dim = 256;
  const auto rows = gaussian(n * dim, 1);
  const auto q = gaussian(dim, 2);
  std::vector<double> out(n);
  for (auto _ : state) {
    Kernel(rows, dim, q, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n));
}

template <auto Kernel>
void adcScore(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  constexpr std::size_t m = 8, ksub = 256;
  pact::Rng rng(3);
  std::vector<std::uint8_t> codes(n * m);
  for (auto& c : codes) c = static_cast<std::uint8_t>(rng.below(ksub));
  const auto table = gaussian(m * ksub, 4);
  std::vector<double> out(n);
  for (auto _ : state) {
    Kernel(codes, m, ksub, table, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n));
}

template <auto Kernel>
void assignNearest(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  constexpr std::size_t dim = 8, ksub = 256;
  const auto points = gaussian(n * dim, 5);
  const auto centroids = gaussian(ksub * dim, 6);
  std::vector<std::uint32_t> assignment(n);
  std::vector<double> d2(n);
  for (auto _ : state) {
    Kernel(points, dim, centroids, assignment, d2);
    benchmark::DoNotOptimize(d2.data());
  }
}

template <auto Kernel>
void matVec(benchmark::State& state) {
  const auto dim = static_cast<std::size_t>(state.range(0));
  const auto matrix = gaussian(dim * dim, 7);
  const auto x = gaussian(dim, 8);
  std::vector<double> out(dim);
  for (auto _ : state) {
    Kernel(matrix, x, out);
    benchmark::DoNotOptimize(out.data());
  }
}

template <auto Kernel>
void topKNeighbors(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  constexpr std::size_t dim = 64;
  const auto rows = gaussian(n * dim, 9);
  const auto rank = identityRank(n);
  for (auto _ : state) benchmark::DoNotOptimize(Kernel(rows, dim, 10, rank));
}

}  // namespace

BENCHMARK(scoreAll<k::serial::scoreAll>)->Name("scoreAll/serial")->Arg(10000)->Arg(100000);
BENCHMARK(scoreAll<k::omp::scoreAll>)->Name("scoreAll/omp")->Arg(10000)->Arg(100000)->UseRealTime();
BENCHMARK(adcScore<k::serial::adcScore>)->Name("adcScore/serial")->Arg(10000)->Arg(100000);
BENCHMARK(adcScore<k::omp::adcScore>)->Name("adcScore/omp")->Arg(10000)->Arg(100000)->UseRealTime();
BENCHMARK(assignNearest<k::serial::assignNearest>)->Name("assignNearest/serial")->Arg(10000);
BENCHMARK(assignNearest<k::omp::assignNearest>)->Name("assignNearest/omp")->Arg(10000)->UseRealTime();
BENCHMARK(matVec<k::serial::matVec>)->Name("matVec/serial")->Arg(256)->Arg(1024);
BENCHMARK(matVec<k::omp::matVec>)->Name("matVec/omp")->Arg(256)->Arg(1024)->UseRealTime();
BENCHMARK(topKNeighbors<k::serial::topKNeighbors>)->Name("topKNeighbors/serial")->Arg(2000);
BENCHMARK(topKNeighbors<k::omp::topKNeighbors>)->Name("topKNeighbors/omp")->Arg(2000)->UseRealTime();

BENCHMARK_MAIN();
