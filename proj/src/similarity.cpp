#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>

#include "allabel/error.hpp"
#include "allabel/kernels.hpp"
#include "allabel/similarity.hpp"
#include "json.hpp"

namespace allabel {

void ScoringBackend::score_row(std::size_t query, std::span<double> out) const {
  for (std::size_t d = 0; d < out.size(); ++d) out[d] = d == query ? 0.0 : score(query, d);
}

Bm25Backend::Bm25Backend(const Dataset& dataset, Bm25Params params)
    : index_(Bm25Index::build(dataset.samples(), params)) {
  queries_.reserve(dataset.size());
  for (const auto& s : dataset.samples()) queries_.push_back(index_.make_query(tokenize(s.text)));
}

double Bm25Backend::score(std::size_t query, std::size_t doc) const { return index_.score(queries_.at(query), doc); }

void Bm25Backend::score_row(std::size_t query, std::span<double> out) const {
  index_.score_row(queries_.at(query), out);
}

DenseBackend::DenseBackend(std::vector<std::vector<double>> vectors) : vectors_(std::move(vectors)) {
  if (vectors_.empty()) throw std::invalid_argument("dense backend needs at least one vector");
  const std::size_t dim = vectors_.front().size();
  norms_.reserve(vectors_.size());
  for (const auto& v : vectors_) {
    if (v.size() != dim) throw std::invalid_argument("dense vectors must share one dimension");
    double sq = 0.0;
    for (double x : v) sq += x * x;
    norms_.push_back(std::sqrt(sq));
  }
}

DenseBackend DenseBackend::load(const std::filesystem::path& path, const Dataset& dataset) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::vector<double>> vectors(dataset.size());
  std::vector<bool> have(dataset.size(), false);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(path.string(), lineno, e.what());
    }
    if (!j.is_object() || !j.contains("id") || !j["id"].is_string() || !j.contains("vector") ||
        !j["vector"].is_array())
      throw ParseError(path.string(), lineno, "expected {\"id\": string, \"vector\": [numbers]}");
    auto pos = dataset.position(j["id"].get<std::string>());
    if (!pos) continue;
    try {
      vectors[*pos] = j["vector"].get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path.string(), lineno, e.what());
    }
    have[*pos] = true;
  }
  for (std::size_t i = 0; i < have.size(); ++i)
    if (!have[i]) throw Error(path.string() + ": no vector for sample '" + dataset.samples()[i].id + "'");
  return DenseBackend(std::move(vectors));
}

double DenseBackend::score(std::size_t query, std::size_t doc) const {
  const auto& a = vectors_.at(query);
  const auto& b = vectors_.at(doc);
  if (norms_[query] == 0.0 || norms_[doc] == 0.0) return 0.0;
  double dot = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
  return dot / (norms_[query] * norms_[doc]);
}

SimilarityMatrix build_matrix(const Dataset& dataset, const ScoringBackend& backend, Exec exec) {
  const std::size_t n = dataset.size();
  if (n < 2) throw std::invalid_argument("similarity matrix needs at least 2 samples");
  if (backend.size() != n) throw std::invalid_argument("backend size does not match dataset size");
  std::vector<double> scores(n * n);
  if (exec == Exec::parallel)
    kernels::omp::fill_scores(backend, scores);
  else
    kernels::serial::fill_scores(backend, scores);
  auto ids = dataset.ids();
  return SimilarityMatrix(ids, ids, std::move(scores), false);
}

SimilarityMatrix normalize(const SimilarityMatrix& matrix) {
  if (matrix.normalized()) throw std::invalid_argument("matrix is already normalized");
  double lo = 0.0, hi = 0.0;
  bool any = false;
  for (double v : matrix.data()) {
    if (v != v) continue;
    if (!any) {
      lo = hi = v;
      any = true;
    } else {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (!any) throw std::invalid_argument("matrix has no unmasked cell to normalize");
  std::vector<double> out(matrix.data());
  const double span = hi - lo;
  for (double& v : out) {
    if (v != v) continue;
    v = span > 0.0 ? (v - lo) / span : 0.0;
  }
  return SimilarityMatrix(matrix.row_ids(), matrix.col_ids(), std::move(out), true);
}

SimilarityMatrix drop_columns(const SimilarityMatrix& matrix, std::span<const std::string> ids) {
  std::vector<bool> drop(matrix.cols(), false);
  for (const auto& id : ids) {
    auto c = matrix.col_index(id);
    if (!c) throw std::invalid_argument("cannot drop unknown column '" + id + "'");
    drop[*c] = true;
  }
  std::vector<std::size_t> keep;
  std::vector<std::string> col_ids;
  for (std::size_t c = 0; c < matrix.cols(); ++c) {
    if (drop[c]) continue;
    keep.push_back(c);
    col_ids.push_back(matrix.col_ids()[c]);
  }
  std::vector<double> scores;
  scores.reserve(matrix.rows() * keep.size());
  for (std::size_t r = 0; r < matrix.rows(); ++r)
    for (std::size_t c : keep) scores.push_back(matrix.at(r, c));
  return SimilarityMatrix(matrix.row_ids(), std::move(col_ids), std::move(scores), matrix.normalized());
}

SimilarityMatrix select_rows(const SimilarityMatrix& matrix, std::span<const std::string> ids) {
  std::vector<double> scores;
  scores.reserve(ids.size() * matrix.cols());
  std::vector<std::string> row_ids;
  for (const auto& id : ids) {
    auto r = matrix.row_index(id);
    if (!r) throw std::invalid_argument("unknown row '" + id + "'");
    auto row = matrix.row(*r);
    scores.insert(scores.end(), row.begin(), row.end());
    row_ids.push_back(id);
  }
  return SimilarityMatrix(std::move(row_ids), matrix.col_ids(), std::move(scores), matrix.normalized());
}

RankedList ranked(const SimilarityMatrix& matrix, std::string_view query_id) {
  auto r = matrix.row_index(query_id);
  if (!r) throw std::invalid_argument("unknown query id '" + std::string(query_id) + "'");
  auto row = matrix.row(*r);
  std::vector<std::size_t> order;
  for (std::size_t c = 0; c < matrix.cols(); ++c)
    if (!matrix.masked(*r, c)) order.push_back(c);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (row[a] != row[b]) return row[a] > row[b];
    return a < b;
  });
  RankedList out{std::string(query_id), {}};
  out.candidates.reserve(order.size());
  for (std::size_t i = 0; i < order.size(); ++i)
    out.candidates.push_back({matrix.col_ids()[order[i]], row[order[i]], i + 1});
  return out;
}

}  // namespace allabel
