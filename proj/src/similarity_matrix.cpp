#include <cstring>
#include <stdexcept>

#include "allabel/similarity.hpp"

namespace allabel {

SimilarityMatrix::SimilarityMatrix(std::vector<std::string> row_ids, std::vector<std::string> col_ids,
                                   std::vector<double> scores, bool normalized)
    : row_ids_(std::move(row_ids)), col_ids_(std::move(col_ids)), scores_(std::move(scores)), normalized_(normalized) {
  if (scores_.size() != row_ids_.size() * col_ids_.size())
    throw std::invalid_argument("score table size does not match " + std::to_string(row_ids_.size()) + " x " +
                                std::to_string(col_ids_.size()));
  for (std::size_t r = 0; r < row_ids_.size(); ++r)
    if (!row_index_.emplace(row_ids_[r], r).second)
      throw std::invalid_argument("duplicate row id '" + row_ids_[r] + "'");
  for (std::size_t c = 0; c < col_ids_.size(); ++c)
    if (!col_index_.emplace(col_ids_[c], c).second)
      throw std::invalid_argument("duplicate column id '" + col_ids_[c] + "'");
  for (std::size_t r = 0; r < row_ids_.size(); ++r) {
    auto it = col_index_.find(row_ids_[r]);
    if (it != col_index_.end()) scores_[r * col_ids_.size() + it->second] = kMasked;
  }
  for (std::size_t r = 0; r < row_ids_.size(); ++r) {
    for (std::size_t c = 0; c < col_ids_.size(); ++c) {
      const double v = at(r, c);
      if (v != v && row_ids_[r] != col_ids_[c])
        throw std::invalid_argument("NaN score outside the self-pair mask at (" + row_ids_[r] + ", " + col_ids_[c] + ")");
    }
  }
}

std::optional<std::size_t> SimilarityMatrix::row_index(std::string_view id) const {
  auto it = row_index_.find(std::string(id));
  if (it == row_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> SimilarityMatrix::col_index(std::string_view id) const {
  auto it = col_index_.find(std::string(id));
  if (it == col_index_.end()) return std::nullopt;
  return it->second;
}

bool SimilarityMatrix::operator==(const SimilarityMatrix& o) const {
  if (row_ids_ != o.row_ids_ || col_ids_ != o.col_ids_ || normalized_ != o.normalized_) return false;
  return scores_.size() == o.scores_.size() &&
         std::memcmp(scores_.data(), o.scores_.data(), scores_.size() * sizeof(double)) == 0;
}

double symmetric_score(const SimilarityMatrix& square, std::size_t i, std::size_t j) {
  const double a = square.at(i, j);
  const double b = square.at(j, i);
  return a > b ? a : b;
}

}  // namespace allabel
