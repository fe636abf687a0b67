#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "allabel/corpus.hpp"
#include "json.hpp"

namespace allabel {

enum class Outcome { tp, fp, tn, fn };
std::string_view to_string(Outcome o);

struct MatchCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  void add(Outcome o);
  MatchCounts& operator+=(const MatchCounts& other);
  std::size_t total() const { return tp + fp + tn + fn; }
  bool operator==(const MatchCounts&) const = default;
};

/// Trims, collapses internal whitespace runs to one space, then applies
/// Unicode NFC. Invalid UTF-8 is compared byte-wise after whitespace handling.
std::string normalize_value(std::string_view value);

/// Exact multiset comparison of normalized records.
Outcome classify(const std::vector<EntityRecord>& label, const std::vector<EntityRecord>& predicted);

/// Precision/recall F1 with 0/0 -> 0, except tp = fp = fn = 0 < tn, which
/// scores 1.
double f1(const MatchCounts& counts);

enum class Aggregation {
  mean_of_means,  // F1 per (sample, type), averaged over types, then samples
  pooled,         // counts pooled per type over samples, F1 per type, averaged over types
};

struct ScoreOptions {
  std::set<std::string> exclude;  // e.g. the labeled pool
  Aggregation aggregation = Aggregation::mean_of_means;
};

struct SampleScore {
  std::string id;
  double f1 = 0.0;
  std::map<std::string, Outcome> outcomes;  // per entity type
};

struct ScoreReport {
  Aggregation aggregation = Aggregation::mean_of_means;
  double dataset_f1 = 0.0;
  std::vector<std::pair<std::string, double>> type_f1;  // schema order
  std::vector<std::pair<std::string, MatchCounts>> type_counts;
  std::vector<SampleScore> samples;  // dataset order
  MatchCounts counts;
};

/// Scores every dataset sample not in options.exclude. Throws Error when an
/// evaluated sample lacks a prediction or a gold label.
ScoreReport score(const Dataset& dataset, const AnnotationMap& predictions, const ScoreOptions& options = {});

nlohmann::ordered_json report_to_json(const ScoreReport& report);

struct CurvePoint {
  std::size_t pool_size;
  double f1;
};

/// Smallest pool size whose F1 is within `threshold` of `reference`, as a
/// percentage of `corpus_size`. F1, reference and threshold share one scale.
/// nullopt when the curve never gets there. Throws on an empty or unsorted
/// curve.
std::optional<double> convergence_fraction(const std::vector<CurvePoint>& curve, double reference,
                                           double threshold, std::size_t corpus_size);

}  // namespace allabel
