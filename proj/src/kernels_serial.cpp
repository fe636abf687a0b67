#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

#include "allabel/error.hpp"
#include "allabel/kernels.hpp"

namespace allabel::kernels::serial {

void fill_scores(const ScoringBackend& backend, std::span<double> out) {
  const std::size_t n = backend.size();
  for (std::size_t q = 0; q < n; ++q) {
    for (std::size_t d = 0; d < n; ++d) {
      if (q == d) {
        out[q * n + d] = SimilarityMatrix::kMasked;
        continue;
      }
      try {
        out[q * n + d] = backend.score(q, d);
      } catch (const std::exception& e) {
        throw Error("backend '" + backend.name() + "' failed at (row " + std::to_string(q) + ", col " +
                    std::to_string(d) + "): " + e.what());
      }
    }
  }
}

RankTable rank_rows(const SimilarityMatrix& m) {
  RankTable t;
  t.rows = m.rows();
  t.cols = m.cols();
  t.order.assign(t.rows * t.cols, 0);
  t.count.assign(t.rows, 0);
  for (std::size_t r = 0; r < t.rows; ++r) {
    auto row = m.row(r);
    std::uint32_t* dst = t.order.data() + r * t.cols;
    std::uint32_t n = 0;
    for (std::size_t c = 0; c < t.cols; ++c)
      if (!m.masked(r, c)) dst[n++] = static_cast<std::uint32_t>(c);
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
  std::vector<double> table(m.cols(), 0.0);
  for (std::size_t r = 0; r < t.rows; ++r) {
    auto order = t.row(r);
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
      const double inc = sum_rank_increment(pos + 1, k, x);
      if (inc != 0.0) table[order[pos]] += inc;
    }
  }
  return table;
}

std::vector<double> mean_similarity(const SimilarityMatrix& square) {
  const std::size_t n = square.rows();
  std::vector<double> mean(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) sum += symmetric_score(square, i, j);
    mean[i] = n > 1 ? sum / static_cast<double>(n - 1) : 0.0;
  }
  return mean;
}

void relax_min_distance(const SimilarityMatrix& square, std::size_t center, std::span<double> min_dist) {
  for (std::size_t c = 0; c < square.rows(); ++c) {
    if (c == center) {
      min_dist[c] = 0.0;
      continue;
    }
    min_dist[c] = std::min(min_dist[c], 1.0 - symmetric_score(square, c, center));
  }
}

}  // namespace allabel::kernels::serial
