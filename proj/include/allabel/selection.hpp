#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "allabel/annotator.hpp"
#include "allabel/corpus.hpp"
#include "allabel/prompt.hpp"
#include "allabel/similarity.hpp"

namespace allabel {

/// Annotation budget M and its per-stage split.
struct Budget {
  std::size_t total = 0;
  std::vector<unsigned> proportion;      // one positive share per stage
  std::vector<std::size_t> stage_sizes;  // sums to total

  bool operator==(const Budget&) const = default;
};

/// Largest-remainder apportionment of M over the (diversity, similarity,
/// uncertainty) shares: floor(M p_i / sum p), then the leftover units go to
/// the largest fractional parts, ties to the earlier stage. Requires every
/// share > 0 and M >= 3.
Budget split_budget(std::size_t total, std::array<unsigned, 3> proportion = {1, 3, 1});

enum class StageKind { diversity, similarity, uncertainty };
std::string_view stage_name(StageKind kind);

/// The three orders the similarity-before-uncertainty constraint allows.
enum class StageOrder { dsu, sdu, sud };
std::string to_string(StageOrder order);
/// Accepts "d-s-u", "dsu" and upper-case variants.
StageOrder parse_order(std::string_view text);
std::array<StageKind, 3> stages_of(StageOrder order);

struct TraceEntry {
  std::string stage;
  std::string kind;  // seed | pick | weak_point
  std::string id;
  double score = 0.0;

  bool operator==(const TraceEntry&) const = default;
};

struct StageSelection {
  std::string name;
  std::vector<std::string> ids;  // in pick order

  bool operator==(const StageSelection&) const = default;
};

struct SelectionResult {
  std::string strategy;
  std::optional<std::string> order;
  std::optional<std::size_t> k;
  std::optional<std::size_t> x;
  std::optional<std::uint64_t> seed;
  Budget budget;
  std::vector<StageSelection> stages;
  std::vector<TraceEntry> trace;

  /// Union of the stages in stage order.
  std::vector<std::string> selected() const;
  bool operator==(const SelectionResult&) const = default;
};

/// Stage sizes match the budget, stages are disjoint and free of duplicates.
/// Throws std::invalid_argument describing the first problem found.
void check_selection(const SelectionResult& result);

/// Candidate id -> accumulated sum_rank, in column order of the scored matrix.
struct SumRankTable {
  std::vector<std::string> ids;
  std::vector<double> scores;

  double of(std::string_view id) const;
  bool operator==(const SumRankTable&) const = default;
};

struct WeakPoint {
  std::string id;
  std::size_t best_rank;  // rank of the best-ranked D1 member; count + 1 when none is rankable
};

/// Sample with the lowest mean symmetrized similarity to all others; ties to
/// the lowest position. `square` must be normalized with rows == columns.
std::string seed_sample(const SimilarityMatrix& square, Exec exec = Exec::parallel);

/// Greedy max-min core-set on distance 1 - sym(i, j). With nothing already
/// selected the first pick is seed_sample(); otherwise the greedy continues
/// from `already_selected` as centers. Picks are returned in order.
std::vector<std::string> diversity_stage(const SimilarityMatrix& square, std::size_t m,
                                         std::span<const std::string> already_selected = {},
                                         Exec exec = Exec::parallel, std::vector<TraceEntry>* trace = nullptr);

/// Per-column composite similarity: for each row, a candidate at rank r
/// gains 1 (r <= k), 1/(r - k + 1) (k < r <= x) or 0. Requires x > k >= 1.
SumRankTable sum_rank_scores(const SimilarityMatrix& matrix, std::size_t k, std::size_t x,
                             Exec exec = Exec::parallel);

/// The m candidates with the highest sum_rank; ties by column position.
std::vector<std::string> similarity_stage(const SimilarityMatrix& matrix, std::size_t k, std::size_t x,
                                          std::size_t m, Exec exec = Exec::parallel,
                                          std::vector<TraceEntry>* trace = nullptr);

/// Queries ordered by how badly the current corpus `d1` serves them: the rank
/// of the best D1 member in each row's full ranking, descending, ties by row
/// position. Returns the first m.
std::vector<WeakPoint> weak_test_points(const SimilarityMatrix& matrix, std::span<const std::string> d1,
                                        std::size_t m);

/// Restricts `matrix` to the m weak test points and drops the D1 columns,
/// then takes the top m by sum_rank on what is left.
std::vector<std::string> uncertainty_stage(const SimilarityMatrix& matrix, std::span<const std::string> d1,
                                           std::size_t k, std::size_t x, std::size_t m,
                                           Exec exec = Exec::parallel, std::vector<TraceEntry>* trace = nullptr);

struct SelectConfig {
  StageOrder order = StageOrder::dsu;
  std::array<unsigned, 3> proportion{1, 3, 1};
  std::size_t k = 3;
  Exec exec = Exec::parallel;
};

/// x used by the similarity and uncertainty stages: the similarity stage
/// size, lifted to k + 1 when it does not exceed k.
std::size_t sum_rank_horizon(std::size_t similarity_size, std::size_t k);

/// The three-stage selection. `matrix` must be the normalized N x N matrix
/// over `dataset` in dataset order.
SelectionResult allabel_select(const Dataset& dataset, const SimilarityMatrix& matrix, std::size_t budget,
                               const SelectConfig& config = {});

std::vector<std::string> random_select(const Dataset& dataset, std::size_t budget, std::uint64_t seed);

/// Core-set with a uniformly drawn first pick.
std::vector<std::string> coldstart_coreset(const SimilarityMatrix& square, std::size_t budget, std::uint64_t seed,
                                           Exec exec = Exec::parallel);

/// Zero-shot pass over every sample; ranks by mean per-entity-type perplexity,
/// highest first, ties by position. Throws CapabilityError when the
/// annotator cannot return log-probabilities.
std::vector<std::string> perplexity_select(const Dataset& dataset, std::size_t budget, Annotator& annotator,
                                           const PromptTemplate& tmpl, std::size_t max_in_flight = 1);

/// Wraps a single-stage baseline's ids in a SelectionResult.
SelectionResult single_stage_result(std::string strategy, std::vector<std::string> ids,
                                    std::optional<std::uint64_t> seed = std::nullopt);

/// Pretty-printed JSON with a trailing newline. Validates with
/// check_selection() first.
std::string selection_to_json(const SelectionResult& result);
SelectionResult selection_from_json(std::string_view text);
void save_selection(const SelectionResult& result, const std::filesystem::path& path);
/// Throws ParseError or SchemaError on malformed files.
SelectionResult load_selection(const std::filesystem::path& path);

}  // namespace allabel
