#include "allabel/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "allabel/error.hpp"
#include "allabel/util.hpp"

namespace allabel {

void SimulatedAnnotatorModel::validate() const {
  if (!(base_accuracy >= 0.0 && base_accuracy <= 1.0)) throw std::invalid_argument("base accuracy must lie in [0, 1]");
  if (!(similarity_gain >= 0.0)) throw std::invalid_argument("similarity gain must be >= 0");
  if (!(pp_at_zero >= 1.0)) throw std::invalid_argument("pp_at_zero must be >= 1");
  if (!(pp_decay > 0.0)) throw std::invalid_argument("pp_decay must be > 0");
  if (!(pp_jitter >= 0.0)) throw std::invalid_argument("pp_jitter must be >= 0");
  if (!(error_pp_factor >= 1.0)) throw std::invalid_argument("error_pp_factor must be >= 1");
}

double SimulatedAnnotatorModel::correct_probability(double s) const {
  return std::clamp(base_accuracy + similarity_gain * s, 0.0, 1.0);
}

std::string SimulatedAnnotatorModel::id() const {
  char buf[128];
  std::snprintf(buf, sizeof buf, "sim:a0=%.6g,beta=%.6g,seed=%llu,rule=%d", base_accuracy, similarity_gain,
                static_cast<unsigned long long>(seed), static_cast<int>(corruption));
  return buf;
}

double mean_demo_similarity(std::span<const Demonstration> demonstrations) {
  if (demonstrations.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& d : demonstrations) sum += std::clamp(d.score, 0.0, 1.0);
  return sum / static_cast<double>(demonstrations.size());
}

namespace {

std::uint64_t stream(const SimulatedAnnotatorModel& m, std::string_view query, std::string_view tag) {
  return mix64(fnv1a64(tag, fnv1a64(query, mix64(m.seed))));
}

std::string perturb_value(std::string v) {
  for (char& c : v) {
    if (c >= '0' && c <= '9') {
      c = c == '9' ? '1' : static_cast<char>(c + 1);
      return v;
    }
  }
  return v + "-x";
}

// Splits text into maximal ASCII-alphanumeric runs and single other bytes.
std::vector<std::string> pieces(const std::string& text) {
  std::vector<std::string> out;
  std::string run;
  for (char c : text) {
    const bool alnum = (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
    if (alnum) {
      run.push_back(c);
      continue;
    }
    if (!run.empty()) {
      out.push_back(std::move(run));
      run.clear();
    }
    out.emplace_back(1, c);
  }
  if (!run.empty()) out.push_back(std::move(run));
  return out;
}

}  // namespace

Completion simulated_annotate(std::string_view query_id, std::span<const Demonstration> demonstrations,
                              const Annotations& gold, const DatasetSchema& schema,
                              const SimulatedAnnotatorModel& model) {
  const double sim = mean_demo_similarity(demonstrations);
  const double p = model.correct_probability(sim);

  Annotations out;
  std::size_t wrong = 0;
  for (const auto& type : schema.entity_types()) {
    auto it = gold.find(type.name);
    const std::vector<EntityRecord> truth = it == gold.end() ? std::vector<EntityRecord>{} : it->second;
    const std::uint64_t h = stream(model, query_id, type.name);
    const double u = unit_interval(h);
    if (u < p) {
      out[type.name] = truth;
      continue;
    }
    ++wrong;
    std::vector<EntityRecord> bad;
    if (truth.empty()) {
      // Hallucinate a record so the type is scored wrong (FP).
      EntityRecord rec;
      rec[type.attributes.empty() ? "value" : type.attributes.front()] = "unspecified";
      bad.push_back(std::move(rec));
    } else {
      CorruptionRule rule = model.corruption;
      if (rule == CorruptionRule::mixed) rule = (mix64(h) & 1) ? CorruptionRule::drop : CorruptionRule::perturb;
      if (rule == CorruptionRule::perturb) {
        bad = truth;
        auto& first = bad.front();
        if (first.empty()) {
          first["value"] = "unspecified";
        } else {
          auto& [attr, value] = *first.begin();
          value = perturb_value(value);
        }
      }
    }
    out[type.name] = std::move(bad);
  }

  Completion c;
  c.text = render_annotations(out, schema);

  const double z = 2.0 * unit_interval(stream(model, query_id, "\x01pp")) - 1.0;
  const double frac_wrong = schema.size() ? static_cast<double>(wrong) / static_cast<double>(schema.size()) : 0.0;
  const double log_pp = std::log(model.pp_at_zero) - model.pp_decay * sim + model.pp_jitter * z +
                        std::log(model.error_pp_factor) * frac_wrong;
  const double lp = -std::max(0.0, log_pp);
  std::vector<TokenLogprob> tokens;
  for (auto& piece : pieces(c.text)) tokens.push_back({std::move(piece), lp});
  c.usage.completion_tokens = static_cast<long>(tokens.size());
  c.token_logprobs = std::move(tokens);
  return c;
}

SimulatedAnnotator::SimulatedAnnotator(SimulatedAnnotatorModel model, DatasetSchema schema, AnnotationMap gold)
    : model_(model), schema_(std::move(schema)), gold_(std::move(gold)) {
  model_.validate();
}

Completion SimulatedAnnotator::annotate(const AnnotationRequest& request) {
  auto it = gold_.find(request.sample_id);
  if (it == gold_.end()) throw AnnotatorError("simulator has no gold annotation for '" + request.sample_id + "'");
  return simulated_annotate(request.sample_id, request.demonstrations, it->second.annotations, schema_, model_);
}

}  // namespace allabel
