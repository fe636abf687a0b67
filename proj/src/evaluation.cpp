#include "allabel/evaluation.hpp"

#include <unicode/normalizer2.h>
#include <unicode/unistr.h>

#include <algorithm>
#include <stdexcept>

#include "allabel/error.hpp"

namespace allabel {

std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::tp:
      return "TP";
    case Outcome::fp:
      return "FP";
    case Outcome::tn:
      return "TN";
    case Outcome::fn:
      return "FN";
  }
  return "?";
}

void MatchCounts::add(Outcome o) {
  switch (o) {
    case Outcome::tp:
      ++tp;
      break;
    case Outcome::fp:
      ++fp;
      break;
    case Outcome::tn:
      ++tn;
      break;
    case Outcome::fn:
      ++fn;
      break;
  }
}

MatchCounts& MatchCounts::operator+=(const MatchCounts& o) {
  tp += o.tp;
  fp += o.fp;
  tn += o.tn;
  fn += o.fn;
  return *this;
}

std::string normalize_value(std::string_view value) {
  std::string collapsed;
  bool pending_space = false;
  for (char c : value) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
      pending_space = !collapsed.empty();
      continue;
    }
    if (pending_space) collapsed.push_back(' ');
    pending_space = false;
    collapsed.push_back(c);
  }

  const icu::UnicodeString in = icu::UnicodeString::fromUTF8(collapsed);
  // Ill-formed input decodes to U+FFFD; such values are compared as raw bytes.
  std::size_t replacements = 0;
  for (int32_t i = 0; i < in.length(); ++i) replacements += in.charAt(i) == 0xFFFD;
  std::size_t literal = 0;
  for (auto pos = collapsed.find("\xEF\xBF\xBD"); pos != std::string::npos; pos = collapsed.find("\xEF\xBF\xBD", pos + 3))
    ++literal;
  if (replacements != literal) return collapsed;

  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) return collapsed;
  const icu::UnicodeString out = nfc->normalize(in, status);
  if (U_FAILURE(status)) return collapsed;
  std::string result;
  out.toUTF8String(result);
  return result;
}

namespace {

std::vector<EntityRecord> normalized(const std::vector<EntityRecord>& records) {
  std::vector<EntityRecord> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    EntityRecord n;
    for (const auto& [k, v] : r) n[k] = normalize_value(v);
    out.push_back(std::move(n));
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

Outcome classify(const std::vector<EntityRecord>& label, const std::vector<EntityRecord>& predicted) {
  if (label.empty() && predicted.empty()) return Outcome::tn;
  if (predicted.empty()) return Outcome::fn;
  if (!label.empty() && normalized(label) == normalized(predicted)) return Outcome::tp;
  return Outcome::fp;
}

double f1(const MatchCounts& c) {
  if (c.tp == 0 && c.fp == 0 && c.fn == 0) return c.tn > 0 ? 1.0 : 0.0;
  const double tp = static_cast<double>(c.tp);
  const double p = c.tp + c.fp ? tp / static_cast<double>(c.tp + c.fp) : 0.0;
  const double r = c.tp + c.fn ? tp / static_cast<double>(c.tp + c.fn) : 0.0;
  return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
}

ScoreReport score(const Dataset& dataset, const AnnotationMap& predictions, const ScoreOptions& options) {
  const auto& types = dataset.schema().entity_types();
  if (types.empty()) throw SchemaError("schema has no entity types to score");
  static const std::vector<EntityRecord> none;
  auto records = [](const Annotations& a, const std::string& type) -> const std::vector<EntityRecord>& {
    auto it = a.find(type);
    return it == a.end() ? none : it->second;
  };

  ScoreReport report;
  report.aggregation = options.aggregation;
  std::vector<MatchCounts> per_type(types.size());
  std::vector<double> type_sum(types.size(), 0.0);
  for (const auto& sample : dataset.samples()) {
    if (options.exclude.count(sample.id)) continue;
    const Annotations* gold = dataset.gold_for(sample.id);
    if (!gold) throw Error("no gold annotation for evaluated sample '" + sample.id + "'");
    auto pit = predictions.find(sample.id);
    if (pit == predictions.end()) throw Error("no prediction for evaluated sample '" + sample.id + "'");

    SampleScore s{sample.id, 0.0, {}};
    double sum = 0.0;
    for (std::size_t t = 0; t < types.size(); ++t) {
      const Outcome o = classify(records(*gold, types[t].name), records(pit->second.annotations, types[t].name));
      MatchCounts one;
      one.add(o);
      const double v = f1(one);
      sum += v;
      type_sum[t] += v;
      per_type[t] += one;
      report.counts += one;
      s.outcomes[types[t].name] = o;
    }
    s.f1 = sum / static_cast<double>(types.size());
    report.samples.push_back(std::move(s));
  }
  if (report.samples.empty()) throw std::invalid_argument("no samples left to score");

  const double n = static_cast<double>(report.samples.size());
  for (std::size_t t = 0; t < types.size(); ++t) {
    const double v = options.aggregation == Aggregation::pooled ? f1(per_type[t]) : type_sum[t] / n;
    report.type_f1.emplace_back(types[t].name, v);
    report.type_counts.emplace_back(types[t].name, per_type[t]);
  }
  double total = 0.0;
  if (options.aggregation == Aggregation::pooled) {
    for (const auto& [name, v] : report.type_f1) total += v;
    report.dataset_f1 = total / static_cast<double>(types.size());
  } else {
    for (const auto& s : report.samples) total += s.f1;
    report.dataset_f1 = total / n;
  }
  return report;
}

nlohmann::ordered_json report_to_json(const ScoreReport& report) {
  using ojson = nlohmann::ordered_json;
  auto counts = [](const MatchCounts& c) { return ojson{{"tp", c.tp}, {"fp", c.fp}, {"tn", c.tn}, {"fn", c.fn}}; };
  ojson j;
  j["aggregation"] = report.aggregation == Aggregation::pooled ? "pooled" : "mean_of_means";
  j["f1"] = report.dataset_f1;
  j["evaluated"] = report.samples.size();
  j["counts"] = counts(report.counts);
  j["types"] = ojson::array();
  for (std::size_t t = 0; t < report.type_f1.size(); ++t)
    j["types"].push_back(
        {{"name", report.type_f1[t].first}, {"f1", report.type_f1[t].second}, {"counts", counts(report.type_counts[t].second)}});
  j["samples"] = ojson::array();
  for (const auto& s : report.samples) {
    ojson outcomes = ojson::object();
    for (const auto& [type, o] : s.outcomes) outcomes[type] = std::string(to_string(o));
    j["samples"].push_back({{"id", s.id}, {"f1", s.f1}, {"outcomes", outcomes}});
  }
  return j;
}

std::optional<double> convergence_fraction(const std::vector<CurvePoint>& curve, double reference,
                                           double threshold, std::size_t corpus_size) {
  if (curve.empty()) throw std::invalid_argument("convergence needs a non-empty curve");
  if (corpus_size == 0) throw std::invalid_argument("corpus size must be positive");
  for (std::size_t i = 1; i < curve.size(); ++i)
    if (curve[i].pool_size < curve[i - 1].pool_size) throw std::invalid_argument("curve is not sorted by pool size");
  for (const auto& p : curve)
    if (p.f1 >= reference - threshold)
      return 100.0 * static_cast<double>(p.pool_size) / static_cast<double>(corpus_size);
  return std::nullopt;
}

}  // namespace allabel
