#include <benchmark/benchmark.h>

#include "trialmatch/common/rng.h"
#include "trialmatch/evalkit/diagnostics.h"

namespace {

using namespace trialmatch::evalkit;

std::vector<Point> cloud(trialmatch::Rng& rng, std::size_t n, double shift) {
  std::vector<Point> out(n);
  for (auto& p : out) p = {rng.normal() + shift, rng.normal()};
  return out;
}

void BM_MmdTest(benchmark::State& state) {
  trialmatch::Rng rng(9);
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto x = cloud(rng, n, 0.0);
  const auto y = cloud(rng, n, 0.5);
  const auto permutations = static_cast<std::size_t>(state.range(1));
  for (auto _ : state) {
    benchmark::DoNotOptimize(mmd_test(x, y, permutations, 1));
  }
}
BENCHMARK(BM_MmdTest)->Args({100, 1000})->Args({200, 10000})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
