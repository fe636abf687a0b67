#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "allabel/similarity.hpp"

namespace allabel {

Bm25Index::Bm25Index(std::vector<std::string> doc_ids, const std::vector<std::vector<std::string>>& docs,
                     Bm25Params params)
    : params_(params), doc_ids_(std::move(doc_ids)) {
  if (doc_ids_.empty()) throw std::invalid_argument("BM25 index needs a non-empty corpus");
  if (doc_ids_.size() != docs.size()) throw std::invalid_argument("doc id count does not match document count");
  if (!(params_.k1 >= 0.0)) throw std::invalid_argument("BM25 k1 must be >= 0");
  if (!(params_.b >= 0.0 && params_.b <= 1.0)) throw std::invalid_argument("BM25 b must lie in [0, 1]");

  for (std::size_t d = 0; d < doc_ids_.size(); ++d) {
    if (!doc_index_.emplace(doc_ids_[d], d).second)
      throw std::invalid_argument("duplicate document id '" + doc_ids_[d] + "'");
  }

  doc_terms_.resize(docs.size());
  doc_len_.resize(docs.size());
  std::uint64_t total_len = 0;
  for (std::size_t d = 0; d < docs.size(); ++d) {
    std::unordered_map<TermId, std::uint32_t> counts;
    for (const auto& tok : docs[d]) {
      auto [it, inserted] = vocab_.try_emplace(tok, static_cast<TermId>(vocab_.size()));
      if (inserted) {
        df_.push_back(0);
        postings_.emplace_back();
      }
      ++counts[it->second];
    }
    auto& terms = doc_terms_[d];
    terms.assign(counts.begin(), counts.end());
    std::sort(terms.begin(), terms.end());
    for (const auto& [term, tf] : terms) {
      ++df_[term];
      postings_[term].push_back({static_cast<std::uint32_t>(d), tf});
    }
    doc_len_[d] = static_cast<std::uint32_t>(docs[d].size());
    total_len += docs[d].size();
  }
  avg_dl_ = static_cast<double>(total_len) / static_cast<double>(docs.size());

  const double n = static_cast<double>(docs.size());
  idf_.resize(df_.size());
  for (std::size_t t = 0; t < df_.size(); ++t) {
    const double df = static_cast<double>(df_[t]);
    idf_[t] = std::log((n - df + 0.5) / (df + 0.5) + 1.0);
  }
}

Bm25Index Bm25Index::build(const std::vector<Sample>& samples, Bm25Params params) {
  std::vector<std::string> ids;
  std::vector<std::vector<std::string>> docs;
  ids.reserve(samples.size());
  docs.reserve(samples.size());
  for (const auto& s : samples) {
    ids.push_back(s.id);
    docs.push_back(tokenize(s.text));
  }
  return Bm25Index(std::move(ids), docs, params);
}

std::optional<std::size_t> Bm25Index::doc_index(std::string_view id) const {
  auto it = doc_index_.find(std::string(id));
  if (it == doc_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<Bm25Index::TermId> Bm25Index::term_id(std::string_view term) const {
  auto it = vocab_.find(std::string(term));
  if (it == vocab_.end()) return std::nullopt;
  return it->second;
}

std::uint32_t Bm25Index::df(std::string_view term) const {
  auto id = term_id(term);
  return id ? df_[*id] : 0;
}

double Bm25Index::idf(std::string_view term) const {
  auto id = term_id(term);
  if (id) return idf_[*id];
  const double n = static_cast<double>(num_docs());
  return std::log((n + 0.5) / 0.5 + 1.0);
}

std::uint32_t Bm25Index::tf(std::size_t doc, TermId term) const {
  const auto& terms = doc_terms_[doc];
  auto it = std::lower_bound(terms.begin(), terms.end(), std::pair<TermId, std::uint32_t>{term, 0});
  if (it == terms.end() || it->first != term) return 0;
  return it->second;
}

Bm25Index::Query Bm25Index::make_query(const std::vector<std::string>& tokens) const {
  Query q;
  std::unordered_map<TermId, std::size_t> slot;
  for (const auto& tok : tokens) {
    auto id = term_id(tok);
    // Terms absent from every document have f = 0 everywhere.
    if (!id) continue;
    auto [it, inserted] = slot.try_emplace(*id, q.terms.size());
    if (inserted)
      q.terms.push_back({*id, 1});
    else
      ++q.terms[it->second].count;
  }
  return q;
}

double Bm25Index::term_score(const Query::Term& term, std::uint32_t tf, std::size_t doc) const {
  const double f = static_cast<double>(tf);
  const double k1 = params_.k1;
  const double norm = 1.0 - params_.b + params_.b * static_cast<double>(doc_len_[doc]) / avg_dl_;
  return static_cast<double>(term.count) * idf_[term.id] * (f * (k1 + 1.0)) / (f + k1 * norm);
}

double Bm25Index::score(const Query& query, std::size_t doc) const {
  double s = 0.0;
  for (const auto& term : query.terms) {
    const std::uint32_t f = tf(doc, term.id);
    if (f != 0) s += term_score(term, f, doc);
  }
  return s;
}

void Bm25Index::score_row(const Query& query, std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  for (const auto& term : query.terms) {
    for (const auto& p : postings_[term.id]) out[p.doc] += term_score(term, p.tf, p.doc);
  }
}

bool Bm25Index::operator==(const Bm25Index& o) const {
  return params_.k1 == o.params_.k1 && params_.b == o.params_.b && doc_ids_ == o.doc_ids_ && vocab_ == o.vocab_ &&
         df_ == o.df_ && idf_ == o.idf_ && postings_ == o.postings_ && doc_terms_ == o.doc_terms_ &&
         doc_len_ == o.doc_len_ && avg_dl_ == o.avg_dl_;
}

double bm25_score(const Bm25Index& index, const std::vector<std::string>& query_tokens, std::string_view doc_id) {
  auto doc = index.doc_index(doc_id);
  if (!doc) throw std::out_of_range("unknown document id '" + std::string(doc_id) + "'");
  return index.score(index.make_query(query_tokens), *doc);
}

}  // namespace allabel
