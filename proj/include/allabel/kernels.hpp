#pragma once

// Data-parallel inner loops of the pipeline. Every kernel exists twice: a
// plain serial reference (kernels::serial) and an OpenMP version
// (kernels::omp). Both produce bit-identical results; the tests hold them to
// that and bench/ compares their speed.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "allabel/similarity.hpp"

namespace allabel::kernels {

/// Per-row candidate order: the first count[r] entries of row r are the
/// unmasked column indices sorted by descending score, ties by column index.
struct RankTable {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint32_t> order;
  std::vector<std::uint32_t> count;

  std::span<const std::uint32_t> row(std::size_t r) const { return {order.data() + r * cols, count[r]}; }
  bool operator==(const RankTable&) const = default;
};

/// Increment a candidate at 1-based `rank` receives from one query row:
/// 1 within the top k, 1/(rank - k + 1) up to x, 0 beyond.
inline double sum_rank_increment(std::size_t rank, std::size_t k, std::size_t x) {
  if (rank <= k) return 1.0;
  if (rank <= x) return 1.0 / static_cast<double>(rank - k + 1);
  return 0.0;
}

namespace serial {

/// Row-major N x N scores, one backend.score() call per off-diagonal pair.
void fill_scores(const ScoringBackend& backend, std::span<double> out);
RankTable rank_rows(const SimilarityMatrix& m);
std::vector<double> sum_rank(const SimilarityMatrix& m, std::size_t k, std::size_t x);
std::vector<double> mean_similarity(const SimilarityMatrix& square);
void relax_min_distance(const SimilarityMatrix& square, std::size_t center, std::span<double> min_dist);

}  // namespace serial

namespace omp {

/// Row-parallel, one backend.score_row() call per row.
void fill_scores(const ScoringBackend& backend, std::span<double> out);
RankTable rank_rows(const SimilarityMatrix& m);
std::vector<double> sum_rank(const SimilarityMatrix& m, std::size_t k, std::size_t x);
std::vector<double> mean_similarity(const SimilarityMatrix& square);
void relax_min_distance(const SimilarityMatrix& square, std::size_t center, std::span<double> min_dist);

}  // namespace omp

inline RankTable rank_rows(const SimilarityMatrix& m, Exec exec) {
  return exec == Exec::parallel ? omp::rank_rows(m) : serial::rank_rows(m);
}
inline std::vector<double> sum_rank(const SimilarityMatrix& m, std::size_t k, std::size_t x, Exec exec) {
  return exec == Exec::parallel ? omp::sum_rank(m, k, x) : serial::sum_rank(m, k, x);
}
inline std::vector<double> mean_similarity(const SimilarityMatrix& square, Exec exec) {
  return exec == Exec::parallel ? omp::mean_similarity(square) : serial::mean_similarity(square);
}
inline void relax_min_distance(const SimilarityMatrix& square, std::size_t center, std::span<double> min_dist,
                               Exec exec) {
  if (exec == Exec::parallel)
    omp::relax_min_distance(square, center, min_dist);
  else
    serial::relax_min_distance(square, center, min_dist);
}

}  // namespace allabel::kernels
