// Serial reference kernels against their OpenMP counterparts on synthetic
// corpora of increasing size.

#include <benchmark/benchmark.h>

#include <vector>

#include "allabel/kernels.hpp"
#include "allabel/similarity.hpp"
#include "allabel/synthetic.hpp"

namespace {

using namespace allabel;

struct Corpus {
  Dataset dataset;
  Bm25Backend backend;
  SimilarityMatrix matrix;
};

const Corpus& corpus(std::size_t n) {
  static std::vector<std::unique_ptr<Corpus>> cache;
  for (const auto& c : cache)
    if (c->dataset.size() == n) return *c;
  SyntheticConfig cfg;
  cfg.samples = n;
  Dataset ds = make_synthetic(cfg);
  Bm25Backend backend(ds);
  auto m = normalize(build_matrix(ds, backend, Exec::parallel));
  cache.push_back(std::make_unique<Corpus>(Corpus{std::move(ds), std::move(backend), std::move(m)}));
  return *cache.back();
}

template <bool Parallel>
void BM_fill_scores(benchmark::State& state) {
  const auto& c = corpus(static_cast<std::size_t>(state.range(0)));
  std::vector<double> out(c.dataset.size() * c.dataset.size());
  for (auto _ : state) {
    if constexpr (Parallel)
      kernels::omp::fill_scores(c.backend, out);
    else
      kernels::serial::fill_scores(c.backend, out);
    benchmark::DoNotOptimize(out.data());
  }
}

template <bool Parallel>
void BM_rank_rows(benchmark::State& state) {
  const auto& c = corpus(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    auto t = Parallel ? kernels::omp::rank_rows(c.matrix) : kernels::serial::rank_rows(c.matrix);
    benchmark::DoNotOptimize(t.order.data());
  }
}

template <bool Parallel>
void BM_sum_rank(benchmark::State& state) {
  const auto& c = corpus(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    auto s = Parallel ? kernels::omp::sum_rank(c.matrix, 3, 30) : kernels::serial::sum_rank(c.matrix, 3, 30);
    benchmark::DoNotOptimize(s.data());
  }
}

}  // namespace

BENCHMARK(BM_fill_scores<false>)->Name("fill_scores/serial")->Arg(200)->Arg(800)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_fill_scores<true>)->Name("fill_scores/omp")->Arg(200)->Arg(800)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_rank_rows<false>)->Name("rank_rows/serial")->Arg(200)->Arg(800)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_rank_rows<true>)->Name("rank_rows/omp")->Arg(200)->Arg(800)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_sum_rank<false>)->Name("sum_rank/serial")->Arg(200)->Arg(800)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_sum_rank<true>)->Name("sum_rank/omp")->Arg(200)->Arg(800)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
