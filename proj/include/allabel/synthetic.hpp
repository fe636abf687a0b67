#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "allabel/corpus.hpp"

namespace allabel {

/// Clustered synthesis-procedure corpus with gold labels. Each cluster has its
/// own topic vocabulary and its own pool of entity values, so lexical
/// similarity tracks label similarity.
struct SyntheticConfig {
  std::size_t samples = 200;
  std::size_t clusters = 5;
  std::uint64_t seed = 7;
  /// Relative cluster sizes; cycled when shorter than `clusters`.
  std::vector<double> cluster_weights{0.35, 0.25, 0.2, 0.12, 0.08};
  std::size_t topic_vocabulary = 40;
  std::size_t topic_words = 12;  // per sample
  std::size_t templates = 0;     // procedure templates per cluster; 0 draws every word independently
  double mutation = 0.3;         // chance each template word is redrawn
  std::size_t common_words = 6;  // per sample, shared across clusters

  void validate() const;
};

/// Precursor, Solvent, Modulator and Condition.
DatasetSchema synthetic_schema();

/// Deterministic in the config. Sample ids are "syn-000", "syn-001", ...
/// in dataset order; clusters are interleaved.
Dataset make_synthetic(const SyntheticConfig& config = {});

/// Cluster of every sample, in dataset order.
std::vector<std::size_t> synthetic_clusters(const SyntheticConfig& config = {});

}  // namespace allabel
