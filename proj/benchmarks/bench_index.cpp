#include <benchmark/benchmark.h>

#include <cmath>
#include <cstdio>

#include "trialmatch/common/rng.h"
#include "trialmatch/index/vector_index.h"

namespace {

using trialmatch::Date;
using trialmatch::Rng;
using namespace trialmatch::index;

std::vector<float> random_unit(Rng& rng, std::size_t dim) {
  std::vector<float> v(dim);
  double norm = 0.0;
  for (auto& x : v) {
    x = static_cast<float>(rng.normal());
    norm += static_cast<double>(x) * x;
  }
  for (auto& x : v) x = static_cast<float>(x / std::sqrt(norm));
  return v;
}

VectorIndex space_index(std::size_t n, std::size_t dim) {
  Rng rng(7);
  VectorIndex index(dim);
  for (std::size_t i = 0; i < n; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "NCT%08zu#1", i);
    ItemMeta meta;
    meta.nct_id = std::string(id, 11);
    meta.open_date = Date::from_ymd(2015, 1, 1).plus_days(static_cast<int>(i % 3000));
    if (i % 4 == 0) meta.close_date = meta.open_date->plus_days(900);
    index.add({id, Side::kSpace, random_unit(rng, dim), meta});
  }
  return index;
}

void BM_TopK(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto k = static_cast<std::size_t>(state.range(1));
  const std::size_t dim = 256;
  const auto index = space_index(n, dim);
  Rng rng(11);
  const auto query = random_unit(rng, dim);
  for (auto _ : state) {
    benchmark::DoNotOptimize(index.top_k(query, Side::kSpace, k));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_TopK)->Args({1000, 10})->Args({10000, 10})->Args({10000, 20})->Args({50000, 20});

void BM_TopKTemporal(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto index = space_index(n, 256);
  Rng rng(13);
  const auto query = random_unit(rng, 256);
  QueryFilter filter;
  filter.temporal_as_of = Date::from_ymd(2019, 6, 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(index.top_k(query, Side::kSpace, 10, filter));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_TopKTemporal)->Arg(10000);

}  // namespace

BENCHMARK_MAIN();
