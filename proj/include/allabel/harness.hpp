#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "allabel/annotator.hpp"
#include "allabel/chat_client.hpp"
#include "allabel/corpus.hpp"
#include "allabel/evaluation.hpp"
#include "allabel/prompt.hpp"
#include "allabel/results_log.hpp"
#include "allabel/selection.hpp"
#include "allabel/similarity.hpp"
#include "allabel/simulator.hpp"
#include "allabel/synthetic.hpp"
#include "json.hpp"

namespace allabel {

struct PoolRange {
  std::size_t start = 10;
  std::size_t stop = 60;  // inclusive
  std::size_t step = 5;

  std::vector<std::size_t> sizes() const;
  /// "start:stop:step"
  static PoolRange parse(const std::string& text);
  std::string to_string() const;
};

/// "1:3:1" <-> {1, 3, 1}
std::array<unsigned, 3> parse_proportion(const std::string& text);
std::string proportion_string(const std::array<unsigned, 3>& p);

struct AnnotatorSpec {
  std::string kind = "sim";  // sim | live | replay
  SimulatedAnnotatorModel sim;
  AnnotatorConfig live;
  std::filesystem::path replay;
};

struct ExperimentConfig {
  // dataset: either files or the bundled generator
  std::optional<std::filesystem::path> samples;
  std::optional<std::filesystem::path> schema;
  SyntheticConfig synthetic;
  std::optional<std::filesystem::path> template_path;

  std::vector<std::string> strategies{"allabel", "random", "coreset_cold", "perplexity"};
  PoolRange pools;
  std::vector<std::size_t> shots{3};
  std::size_t runs = 5;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::vector<std::string> orders{"d-s-u"};
  std::vector<std::array<unsigned, 3>> proportions{{1, 3, 1}};
  AnnotatorSpec annotator;
  Bm25Params bm25;
  double threshold = 0.02;
  std::size_t max_in_flight = 4;
  Aggregation aggregation = Aggregation::mean_of_means;

  /// Unknown keys are rejected. Relative paths resolve against `base_dir`.
  static ExperimentConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
  static ExperimentConfig load(const std::filesystem::path& path);
  nlohmann::ordered_json to_json() const;
  /// Throws std::invalid_argument; `corpus_size` bounds the pool sizes.
  void validate(std::size_t corpus_size) const;
};

bool is_stochastic(const std::string& strategy);

struct ResultRow {
  std::string strategy;
  std::string order;       // allabel only
  std::string proportion;  // allabel only
  std::size_t pool_size = 0;
  std::size_t shots = 0;
  std::size_t run = 0;  // 1-based
  std::optional<std::uint64_t> seed;
  double f1 = 0.0;
  std::vector<std::size_t> stage_sizes;
  std::size_t failures = 0;  // annotator errors; the cell is incomplete when > 0
};

struct AggregateRow {
  std::string strategy;
  std::string order;
  std::string proportion;
  std::size_t pool_size = 0;
  std::size_t shots = 0;
  std::size_t runs = 0;
  double mean_f1 = 0.0;
  std::optional<double> stddev_f1;  // stochastic strategies only
  std::vector<std::size_t> stage_sizes;
  bool complete = true;
};

struct ConvergenceRow {
  std::string strategy;
  std::string order;
  std::string proportion;
  std::size_t shots = 0;
  std::optional<double> percent;  // of the corpus; nullopt = not converged
};

struct ResultTable {
  std::size_t corpus_size = 0;
  double threshold = 0.0;
  std::vector<std::pair<std::size_t, double>> reference;  // shots -> full-corpus F1
  std::vector<ResultRow> rows;
  std::vector<AggregateRow> aggregates;
  std::vector<ConvergenceRow> convergence;

  const AggregateRow* find(const std::string& strategy, std::size_t pool_size, std::size_t shots) const;
};

using Progress = std::function<void(const std::string&)>;

/// One pool: every sample annotated with k demonstrations retrieved from
/// `pool` (itself excluded), then scored against gold.
struct CellResult {
  AnnotationMap predictions;
  ScoreReport report;
  std::size_t failures = 0;
};
CellResult run_cell(const Dataset& dataset, const SimilarityMatrix& matrix, std::span<const std::string> pool,
                    std::size_t shots, Annotator& annotator, const PromptTemplate& tmpl,
                    std::size_t max_in_flight, Aggregation aggregation = Aggregation::mean_of_means);

/// Strategies x pool sizes x shots x runs, plus the full-corpus reference per
/// shot count. allabel runs once per (order, proportion) in the config.
/// Annotations go through `log` when given, so an interrupted sweep resumes
/// without repeating finished requests.
ResultTable run_sweep(const Dataset& dataset, const ExperimentConfig& config, Annotator& annotator,
                      ResultsLog* log = nullptr, Progress progress = nullptr);

/// allabel over orders x proportions; other strategies in `config` are ignored.
ResultTable run_ablation(const Dataset& dataset, const std::vector<std::string>& orders,
                         const std::vector<std::array<unsigned, 3>>& proportions, ExperimentConfig config,
                         Annotator& annotator, ResultsLog* log = nullptr, Progress progress = nullptr);

/// table.csv (aggregates), table.json (everything) and plot.csv (one row per
/// run). Byte-identical for identical tables.
void emit_report(const ResultTable& table, const std::filesystem::path& dir);
std::string table_csv(const ResultTable& table);
std::string plot_csv(const ResultTable& table);
nlohmann::ordered_json table_json(const ResultTable& table);

/// Loads the configured dataset (files or generator).
Dataset load_experiment_dataset(const ExperimentConfig& config);
std::unique_ptr<Annotator> make_annotator(const AnnotatorSpec& spec, const Dataset& dataset);

}  // namespace allabel
