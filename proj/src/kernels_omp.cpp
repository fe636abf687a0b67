#include <omp.h>

#include <algorithm>
#include <exception>
#include <string>

#include "allabel/error.hpp"
#include "allabel/kernels.hpp"

namespace allabel::kernels::omp {

namespace {

// Locates the failing column of a row by falling back to pairwise scoring.
[[noreturn]] void rethrow_with_cell(const ScoringBackend& backend, std::size_t q, const std::exception& row_error) {
  const std::size_t n = backend.size();
  for (std::size_t d = 0; d < n; ++d) {
    if (d == q) continue;
    try {
      (void)backend.score(q, d);
    } catch (const std::exception& e) {
      throw Error("backend '" + backend.name() + "' failed at (row " + std::to_string(q) + ", col " +
                  std::to_string(d) + "): " + e.what());
    }
  }
  throw Error("backend '" + backend.name() + "' failed at row " + std::to_string(q) + ": " + row_error.what());
}

}  // namespace

void fill_scores(const ScoringBackend& backend, std::span<double> out) {
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(backend.size());
  // Exceptions cannot leave a parallel region; keep the lowest failing row.
  std::ptrdiff_t failed_row = n;
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t q = 0; q < n; ++q) {
    auto row = out.subspan(static_cast<std::size_t>(q * n), static_cast<std::size_t>(n));
    try {
      backend.score_row(static_cast<std::size_t>(q), row);
    } catch (...) {
#pragma omp critical(allabel_fill_scores)
      {
        if (q < failed_row) {
          failed_row = q;
          failure = std::current_exception();
        }
      }
    }
    row[static_cast<std::size_t>(q)] = SimilarityMatrix::kMasked;
  }
  if (failure) {
    try {
      std::rethrow_exception(failure);
    } catch (const std::exception& e) {
      rethrow_with_cell(backend, static_cast<std::size_t>(failed_row), e);
    }
  }
}

RankTable rank_rows(const SimilarityMatrix& m) {
  RankTable t;
  t.rows = m.rows();
  t.cols = m.cols();
  t.order.assign(t.rows * t.cols, 0);
  t.count.assign(t.rows, 0);
  const std::ptrdiff_t rows = static_cast<std::ptrdiff_t>(t.rows);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ri = 0; ri < rows; ++ri) {
    const auto r = static_cast<std::size_t>(ri);
    auto row = m.row(r);
    std::uint32_t* dst = t.order.data() + r * t.cols;
    std::uint32_t n = 0;
    for (std::size_t c = 0; c < t.cols; ++c)
      if (row[c] == row[c]) dst[n++] = static_cast<std::uint32_t>(c);
    std::sort(dst, dst + n, [&](std::uint32_t a, std::uint32_t b) {
      if (row[a] != row[b]) return row[a] > row[b];
      return a < b;
    });
    t.count[r] = n;
  }
  return t;
}

std::vector<double> sum_rank(const SimilarityMatrix& m, std::size_t k, std::size_t x) {
  const RankTable t = rank_rows(m);
  const std::size_t rows = t.rows;
  const std::size_t cols = t.cols;
  // rank_of[r * cols + c] = 1-based rank of column c in row r, 0 if masked.
  std::vector<std::uint32_t> rank_of(rows * cols, 0);
  const std::ptrdiff_t prow = static_cast<std::ptrdiff_t>(rows);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ri = 0; ri < prow; ++ri) {
    const auto r = static_cast<std::size_t>(ri);
    auto order = t.row(r);
    for (std::size_t pos = 0; pos < order.size(); ++pos)
      rank_of[r * cols + order[pos]] = static_cast<std::uint32_t>(pos + 1);
  }
  // Column-parallel reduction; each column sums its rows in row order, which
  // is the same order the serial kernel accumulates in.
  std::vector<double> table(cols, 0.0);
  const std::ptrdiff_t pcol = static_cast<std::ptrdiff_t>(cols);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ci = 0; ci < pcol; ++ci) {
    const auto c = static_cast<std::size_t>(ci);
    double acc = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
      const std::uint32_t rank = rank_of[r * cols + c];
      if (rank == 0) continue;
      const double inc = sum_rank_increment(rank, k, x);
      if (inc != 0.0) acc += inc;
    }
    table[c] = acc;
  }
  return table;
}

std::vector<double> mean_similarity(const SimilarityMatrix& square) {
  const std::size_t n = square.rows();
  std::vector<double> mean(n, 0.0);
  const std::ptrdiff_t pn = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ii = 0; ii < pn; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) sum += symmetric_score(square, i, j);
    mean[i] = n > 1 ? sum / static_cast<double>(n - 1) : 0.0;
  }
  return mean;
}

void relax_min_distance(const SimilarityMatrix& square, std::size_t center, std::span<double> min_dist) {
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(square.rows());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ci = 0; ci < n; ++ci) {
    const auto c = static_cast<std::size_t>(ci);
    if (c == center) {
      min_dist[c] = 0.0;
      continue;
    }
    min_dist[c] = std::min(min_dist[c], 1.0 - symmetric_score(square, c, center));
  }
}

}  // namespace allabel::kernels::omp
