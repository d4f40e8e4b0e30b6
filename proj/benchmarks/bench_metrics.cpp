#include <benchmark/benchmark.h>

#include "trialmatch/common/rng.h"
#include "trialmatch/evalkit/metrics.h"

namespace {

using namespace trialmatch::evalkit;

void BM_MapAtK(benchmark::State& state) {
  trialmatch::Rng rng(3);
  std::vector<Judgments> queries(static_cast<std::size_t>(state.range(0)));
  for (auto& q : queries) {
    q.resize(20);
    for (std::size_t i = 0; i < q.size(); ++i) q[i] = rng.uniform01() < 0.3;
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(precision_at_k(queries));
    benchmark::DoNotOptimize(map_at_k(queries));
  }
}
BENCHMARK(BM_MapAtK)->Arg(1000)->Arg(10000);

void BM_Auroc(benchmark::State& state) {
  trialmatch::Rng rng(5);
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<double> scores(n);
  std::vector<bool> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    labels[i] = rng.uniform01() < 0.2;
    scores[i] = rng.normal() + (labels[i] ? 1.0 : 0.0);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(auroc(scores, labels));
    benchmark::DoNotOptimize(auprc(scores, labels));
  }
}
BENCHMARK(BM_Auroc)->Arg(1000)->Arg(100000);

}  // namespace

BENCHMARK_MAIN();
