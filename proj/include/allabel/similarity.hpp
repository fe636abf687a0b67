#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "allabel/corpus.hpp"

namespace allabel {

/// Lowercases ASCII and splits on every run of characters that are neither
/// ASCII alphanumerics nor bytes of a multi-byte UTF-8 sequence.
/// "AgNO3 (0.2 mmol)" -> {"agno3", "0", "2", "mmol"}.
std::vector<std::string> tokenize(std::string_view text);

struct Bm25Params {
  double k1 = 1.5;
  double b = 0.75;
};

/// Okapi BM25 over an in-memory corpus, with an inverted index for row-wise
/// scoring. IDF uses the non-negative form ln((N - df + 0.5) / (df + 0.5) + 1).
class Bm25Index {
 public:
  using TermId = std::uint32_t;

  struct Posting {
    std::uint32_t doc;
    std::uint32_t tf;
    bool operator==(const Posting&) const = default;
  };

  /// Query terms known to the index, deduplicated in first-occurrence order,
  /// each with its multiplicity in the query.
  struct Query {
    struct Term {
      TermId id;
      std::uint32_t count;
    };
    std::vector<Term> terms;
  };

  Bm25Index(std::vector<std::string> doc_ids, const std::vector<std::vector<std::string>>& docs,
            Bm25Params params = {});

  static Bm25Index build(const std::vector<Sample>& samples, Bm25Params params = {});

  std::size_t num_docs() const { return doc_ids_.size(); }
  double avg_dl() const { return avg_dl_; }
  const Bm25Params& params() const { return params_; }
  const std::vector<std::string>& doc_ids() const { return doc_ids_; }
  std::optional<std::size_t> doc_index(std::string_view id) const;
  std::size_t doc_length(std::size_t doc) const { return doc_len_[doc]; }

  std::optional<TermId> term_id(std::string_view term) const;
  std::uint32_t df(std::string_view term) const;
  double idf(std::string_view term) const;
  std::uint32_t tf(std::size_t doc, TermId term) const;
  const std::vector<Posting>& postings(TermId term) const { return postings_[term]; }

  Query make_query(const std::vector<std::string>& tokens) const;

  /// Contribution of one query term (with multiplicity) to one document.
  double term_score(const Query::Term& term, std::uint32_t tf, std::size_t doc) const;

  /// Pairwise score by direct lookup. Same summation order as score_row.
  double score(const Query& query, std::size_t doc) const;
  /// Scores every document for `query` by walking posting lists; `out` is
  /// overwritten and must have num_docs() entries.
  void score_row(const Query& query, std::span<double> out) const;

  bool operator==(const Bm25Index& other) const;

 private:
  Bm25Params params_;
  std::vector<std::string> doc_ids_;
  std::unordered_map<std::string, std::size_t> doc_index_;
  std::unordered_map<std::string, TermId> vocab_;
  std::vector<std::uint32_t> df_;
  std::vector<double> idf_;
  std::vector<std::vector<Posting>> postings_;
  // per document: (term, tf) sorted by term id
  std::vector<std::vector<std::pair<TermId, std::uint32_t>>> doc_terms_;
  std::vector<std::uint32_t> doc_len_;
  double avg_dl_ = 0.0;
};

/// BM25 of `query_tokens` against the indexed document `doc_id`.
/// Throws std::out_of_range for an unknown document.
double bm25_score(const Bm25Index& index, const std::vector<std::string>& query_tokens,
                  std::string_view doc_id);

/// Pluggable pairwise scorer over a fixed document set aligned with dataset
/// order. Implementations must be safe for concurrent const use.
class ScoringBackend {
 public:
  virtual ~ScoringBackend() = default;
  virtual std::string name() const = 0;
  virtual std::size_t size() const = 0;
  virtual double score(std::size_t query, std::size_t doc) const = 0;
  /// Default implementation calls score() per column.
  virtual void score_row(std::size_t query, std::span<double> out) const;
};

class Bm25Backend final : public ScoringBackend {
 public:
  Bm25Backend(const Dataset& dataset, Bm25Params params = {});

  std::string name() const override { return "bm25"; }
  std::size_t size() const override { return index_.num_docs(); }
  double score(std::size_t query, std::size_t doc) const override;
  void score_row(std::size_t query, std::span<double> out) const override;

  const Bm25Index& index() const { return index_; }

 private:
  Bm25Index index_;
  std::vector<Bm25Index::Query> queries_;
};

/// Cosine similarity over caller-supplied embeddings. No embedding model is
/// bundled; vectors come from a file (`{"id": ..., "vector": [...]}` lines).
class DenseBackend final : public ScoringBackend {
 public:
  explicit DenseBackend(std::vector<std::vector<double>> vectors);
  static DenseBackend load(const std::filesystem::path& path, const Dataset& dataset);

  std::string name() const override { return "dense"; }
  std::size_t size() const override { return vectors_.size(); }
  double score(std::size_t query, std::size_t doc) const override;

 private:
  std::vector<std::vector<double>> vectors_;
  std::vector<double> norms_;
};

/// Dense (query row x candidate column) score table. Cells whose row id equals
/// their column id are masked (stored as NaN) and never carry a score.
class SimilarityMatrix {
 public:
  static constexpr double kMasked = std::numeric_limits<double>::quiet_NaN();

  SimilarityMatrix() = default;
  /// `scores` is row-major rows x cols. Self-pair cells are overwritten with
  /// the mask regardless of their input value.
  SimilarityMatrix(std::vector<std::string> row_ids, std::vector<std::string> col_ids,
                   std::vector<double> scores, bool normalized = false);

  std::size_t rows() const { return row_ids_.size(); }
  std::size_t cols() const { return col_ids_.size(); }
  const std::vector<std::string>& row_ids() const { return row_ids_; }
  const std::vector<std::string>& col_ids() const { return col_ids_; }
  bool normalized() const { return normalized_; }

  double at(std::size_t r, std::size_t c) const { return scores_[r * col_ids_.size() + c]; }
  bool masked(std::size_t r, std::size_t c) const { return at(r, c) != at(r, c); }
  std::span<const double> row(std::size_t r) const {
    return {scores_.data() + r * col_ids_.size(), col_ids_.size()};
  }
  const std::vector<double>& data() const { return scores_; }

  std::optional<std::size_t> row_index(std::string_view id) const;
  std::optional<std::size_t> col_index(std::string_view id) const;

  /// Bitwise comparison (masked cells compare equal to each other).
  bool operator==(const SimilarityMatrix& other) const;

 private:
  std::vector<std::string> row_ids_;
  std::vector<std::string> col_ids_;
  std::vector<double> scores_;
  bool normalized_ = false;
  std::unordered_map<std::string, std::size_t> row_index_;
  std::unordered_map<std::string, std::size_t> col_index_;
};

enum class Exec { serial, parallel };

/// U: every sample as query (row) against every sample as document (column),
/// in dataset order, diagonal masked. Requires N >= 2.
SimilarityMatrix build_matrix(const Dataset& dataset, const ScoringBackend& backend,
                              Exec exec = Exec::parallel);

/// Global min-max rescale of unmasked cells to [0, 1]; constant input maps to
/// 0. Rejects already-normalized input and matrices with no unmasked cell.
SimilarityMatrix normalize(const SimilarityMatrix& matrix);

SimilarityMatrix drop_columns(const SimilarityMatrix& matrix, std::span<const std::string> ids);

/// Keeps only the given rows, in the order given.
SimilarityMatrix select_rows(const SimilarityMatrix& matrix, std::span<const std::string> ids);

struct RankedCandidate {
  std::string id;
  double score;
  std::size_t rank;  // 1-based
  bool operator==(const RankedCandidate&) const = default;
};

struct RankedList {
  std::string query_id;
  std::vector<RankedCandidate> candidates;
  bool operator==(const RankedList&) const = default;
};

/// Unmasked candidates of `query_id`'s row by descending score, ties broken by
/// ascending column position.
RankedList ranked(const SimilarityMatrix& matrix, std::string_view query_id);

/// max(U[i][j], U[j][i]) for a square matrix whose rows and columns are the
/// same ids in the same order.
double symmetric_score(const SimilarityMatrix& square, std::size_t i, std::size_t j);

}  // namespace allabel
