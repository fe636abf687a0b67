#include <cstring>
#include <limits>

#include "doctest.h"
#include "fixtures.hpp"

#include "allabel/kernels.hpp"
#include "allabel/synthetic.hpp"

using namespace allabel;

namespace {

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_SUITE("kernels") {
  TEST_CASE("increments") {
    CHECK(kernels::sum_rank_increment(2, 3, 12) == 1.0);
    CHECK(kernels::sum_rank_increment(5, 3, 12) == 1.0 / 3.0);
    CHECK(kernels::sum_rank_increment(13, 3, 12) == 0.0);
    CHECK(kernels::sum_rank_increment(12, 3, 12) == 0.1);
  }

  TEST_CASE("score fill is bit-identical") {
    SyntheticConfig cfg;
    cfg.samples = 60;
    const Dataset ds = make_synthetic(cfg);
    const Bm25Backend backend(ds);
    std::vector<double> a(ds.size() * ds.size()), b(a.size());
    kernels::serial::fill_scores(backend, a);
    kernels::omp::fill_scores(backend, b);
    CHECK(same_bits(a, b));
  }

  TEST_CASE("ranking, sum_rank and distance kernels are bit-identical") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const auto m = fixture::random_square(17, seed, seed % 3 == 0);
      CHECK(kernels::serial::rank_rows(m) == kernels::omp::rank_rows(m));
      CHECK(same_bits(kernels::serial::sum_rank(m, 3, 6), kernels::omp::sum_rank(m, 3, 6)));
      CHECK(same_bits(kernels::serial::mean_similarity(m), kernels::omp::mean_similarity(m)));

      std::vector<double> d1(m.rows(), std::numeric_limits<double>::infinity()), d2 = d1;
      for (std::size_t c : {0u, 5u, 9u}) {
        kernels::serial::relax_min_distance(m, c, d1);
        kernels::omp::relax_min_distance(m, c, d2);
      }
      CHECK(same_bits(d1, d2));
    }
  }

  TEST_CASE("rank table skips masked cells") {
    const SimilarityMatrix m({"a", "b"}, {"a", "b", "c"}, {0, 0.5, 0.5, 0.1, 0, 0.9}, true);
    const auto t = kernels::serial::rank_rows(m);
    CHECK(t.count == std::vector<std::uint32_t>{2, 2});
    CHECK(std::vector<std::uint32_t>(t.row(0).begin(), t.row(0).end()) == std::vector<std::uint32_t>{1, 2});
    CHECK(std::vector<std::uint32_t>(t.row(1).begin(), t.row(1).end()) == std::vector<std::uint32_t>{2, 0});
  }
}
