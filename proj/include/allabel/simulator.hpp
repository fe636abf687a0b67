#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include "allabel/annotator.hpp"

namespace allabel {

enum class CorruptionRule {
  mixed,    // drop or perturb, chosen per (query, type) by the noise stream
  drop,     // emit no records
  perturb,  // alter one attribute value of the first record
};

/// Benchmark stand-in for an LLM annotator: each entity type of a query is
/// reproduced from gold with probability min(1, base_accuracy +
/// similarity_gain * mean demonstration similarity), otherwise corrupted.
/// Synthesized perplexity falls with demonstration similarity.
struct SimulatedAnnotatorModel {
  double base_accuracy = 0.3;
  double similarity_gain = 0.6;
  std::uint64_t seed = 11;
  CorruptionRule corruption = CorruptionRule::mixed;

  // PP = pp_at_zero * exp(-pp_decay * sim) * exp(pp_jitter * z_query) * error_pp_factor^(fraction wrong)
  double pp_at_zero = 56.0;
  double pp_decay = 1.96;
  double pp_jitter = 0.25;
  double error_pp_factor = 1.5;

  void validate() const;
  double correct_probability(double mean_similarity) const;
  std::string id() const;
};

/// Deterministic in (query id, entity type, model seed); independent of call
/// order and thread.
Completion simulated_annotate(std::string_view query_id, std::span<const Demonstration> demonstrations,
                              const Annotations& gold, const DatasetSchema& schema,
                              const SimulatedAnnotatorModel& model);

/// Mean of the demonstrations' scores clamped to [0, 1]; 0 without demonstrations.
double mean_demo_similarity(std::span<const Demonstration> demonstrations);

class SimulatedAnnotator final : public Annotator {
 public:
  SimulatedAnnotator(SimulatedAnnotatorModel model, DatasetSchema schema, AnnotationMap gold);

  std::string id() const override { return model_.id(); }
  bool supports_logprobs() const override { return true; }
  /// Throws AnnotatorError when the query has no gold annotation.
  Completion annotate(const AnnotationRequest& request) override;

 private:
  SimulatedAnnotatorModel model_;
  DatasetSchema schema_;
  AnnotationMap gold_;
};

}  // namespace allabel
