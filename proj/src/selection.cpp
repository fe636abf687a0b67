#include "allabel/selection.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <unordered_set>

#include "allabel/error.hpp"
#include "allabel/kernels.hpp"
#include "allabel/util.hpp"

namespace allabel {

std::vector<std::string> SelectionResult::selected() const {
  std::vector<std::string> out;
  for (const auto& s : stages) out.insert(out.end(), s.ids.begin(), s.ids.end());
  return out;
}

void check_selection(const SelectionResult& result) {
  std::unordered_set<std::string> seen;
  std::size_t total = 0;
  for (const auto& stage : result.stages) {
    for (const auto& id : stage.ids) {
      if (!seen.insert(id).second)
        throw std::invalid_argument("id '" + id + "' is selected more than once (stage " + stage.name + ")");
    }
    total += stage.ids.size();
  }
  if (total != result.budget.total)
    throw std::invalid_argument("selection holds " + std::to_string(total) + " ids but the budget is " +
                                std::to_string(result.budget.total));
  if (!result.budget.stage_sizes.empty()) {
    if (result.budget.stage_sizes.size() != result.stages.size())
      throw std::invalid_argument("budget lists " + std::to_string(result.budget.stage_sizes.size()) +
                                  " stage sizes for " + std::to_string(result.stages.size()) + " stages");
    std::size_t sum = 0;
    for (auto s : result.budget.stage_sizes) sum += s;
    if (sum != result.budget.total) throw std::invalid_argument("budget stage sizes do not sum to the total");
    for (std::size_t i = 0; i < result.stages.size(); ++i) {
      // Named stages are budgeted in (diversity, similarity, uncertainty) order.
      std::size_t slot = i;
      for (StageKind kind : {StageKind::diversity, StageKind::similarity, StageKind::uncertainty})
        if (result.stages[i].name == stage_name(kind) && result.stages.size() == 3) slot = static_cast<std::size_t>(kind);
      if (result.stages[i].ids.size() != result.budget.stage_sizes[slot])
        throw std::invalid_argument("stage " + result.stages[i].name + " holds " +
                                    std::to_string(result.stages[i].ids.size()) + " ids but its budget is " +
                                    std::to_string(result.budget.stage_sizes[slot]));
    }
  }
}

double SumRankTable::of(std::string_view id) const {
  for (std::size_t i = 0; i < ids.size(); ++i)
    if (ids[i] == id) return scores[i];
  throw std::out_of_range("no sum_rank entry for '" + std::string(id) + "'");
}

namespace {

void require_square(const SimilarityMatrix& m) {
  if (m.row_ids() != m.col_ids()) throw std::invalid_argument("matrix must have identical row and column ids");
  if (!m.normalized()) throw std::invalid_argument("matrix must be normalized");
}

// Greedy max-min continuation. `chosen` marks centers already in place.
std::vector<std::string> greedy_coreset(const SimilarityMatrix& square, std::size_t m, std::vector<char>& chosen,
                                        std::vector<double>& min_dist, Exec exec, std::string_view stage,
                                        std::vector<TraceEntry>* trace) {
  std::vector<std::string> picks;
  const std::size_t n = square.rows();
  while (picks.size() < m) {
    std::size_t best = n;
    double best_d = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < n; ++c) {
      if (chosen[c]) continue;
      if (min_dist[c] > best_d) {
        best = c;
        best_d = min_dist[c];
      }
    }
    if (best == n) throw std::invalid_argument("no candidates left for the core-set");
    chosen[best] = 1;
    picks.push_back(square.row_ids()[best]);
    if (trace) trace->push_back({std::string(stage), "pick", picks.back(), best_d});
    kernels::relax_min_distance(square, best, min_dist, exec);
  }
  return picks;
}

std::vector<std::size_t> top_by_score(const std::vector<double>& scores, std::size_t m) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  idx.resize(m);
  return idx;
}

void check_horizon(std::size_t k, std::size_t x) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  if (x <= k) throw std::invalid_argument("x must exceed k (x=" + std::to_string(x) + ", k=" + std::to_string(k) + ")");
}

}  // namespace

std::string seed_sample(const SimilarityMatrix& square, Exec exec) {
  require_square(square);
  if (square.rows() < 2) throw std::invalid_argument("seed selection needs at least two samples");
  const auto mean = kernels::mean_similarity(square, exec);
  std::size_t best = 0;
  for (std::size_t i = 1; i < mean.size(); ++i)
    if (mean[i] < mean[best]) best = i;
  return square.row_ids()[best];
}

std::vector<std::string> diversity_stage(const SimilarityMatrix& square, std::size_t m,
                                         std::span<const std::string> already_selected, Exec exec,
                                         std::vector<TraceEntry>* trace) {
  require_square(square);
  const std::size_t n = square.rows();
  if (m + already_selected.size() > n)
    throw std::invalid_argument("diversity stage asks for " + std::to_string(m) + " picks but only " +
                                std::to_string(n - std::min(n, already_selected.size())) + " samples remain");
  std::vector<std::string> picks;
  if (m == 0) return picks;

  std::vector<char> chosen(n, 0);
  std::vector<double> min_dist(n, std::numeric_limits<double>::infinity());
  if (already_selected.empty()) {
    const auto mean = kernels::mean_similarity(square, exec);
    std::size_t seed = 0;
    for (std::size_t i = 1; i < n; ++i)
      if (mean[i] < mean[seed]) seed = i;
    chosen[seed] = 1;
    picks.push_back(square.row_ids()[seed]);
    if (trace) trace->push_back({"diversity", "seed", picks.back(), mean[seed]});
    kernels::relax_min_distance(square, seed, min_dist, exec);
  } else {
    for (const auto& id : already_selected) {
      auto pos = square.row_index(id);
      if (!pos) throw std::invalid_argument("selected id '" + id + "' is not in the matrix");
      if (chosen[*pos]) continue;
      chosen[*pos] = 1;
      kernels::relax_min_distance(square, *pos, min_dist, exec);
    }
  }
  auto rest = greedy_coreset(square, m - picks.size(), chosen, min_dist, exec, "diversity", trace);
  picks.insert(picks.end(), rest.begin(), rest.end());
  return picks;
}

SumRankTable sum_rank_scores(const SimilarityMatrix& matrix, std::size_t k, std::size_t x, Exec exec) {
  check_horizon(k, x);
  if (matrix.rows() == 0 || matrix.cols() == 0) throw std::invalid_argument("sum_rank needs at least one row and column");
  return {matrix.col_ids(), kernels::sum_rank(matrix, k, x, exec)};
}

std::vector<std::string> similarity_stage(const SimilarityMatrix& matrix, std::size_t k, std::size_t x,
                                          std::size_t m, Exec exec, std::vector<TraceEntry>* trace) {
  check_horizon(k, x);
  if (m > matrix.cols())
    throw std::invalid_argument("similarity stage asks for " + std::to_string(m) + " picks from " +
                                std::to_string(matrix.cols()) + " candidates");
  if (m == 0) return {};
  const auto table = sum_rank_scores(matrix, k, x, exec);
  std::vector<std::string> picks;
  for (std::size_t c : top_by_score(table.scores, m)) {
    picks.push_back(table.ids[c]);
    if (trace) trace->push_back({"similarity", "pick", table.ids[c], table.scores[c]});
  }
  return picks;
}

std::vector<WeakPoint> weak_test_points(const SimilarityMatrix& matrix, std::span<const std::string> d1,
                                        std::size_t m) {
  if (d1.empty()) throw std::invalid_argument("weak test points need a non-empty D1");
  if (m > matrix.rows())
    throw std::invalid_argument("asked for " + std::to_string(m) + " weak test points from " +
                                std::to_string(matrix.rows()) + " queries");
  std::vector<char> in_d1(matrix.cols(), 0);
  for (const auto& id : d1) {
    auto c = matrix.col_index(id);
    if (!c) throw std::invalid_argument("D1 member '" + id + "' is not a column of the matrix");
    in_d1[*c] = 1;
  }
  const auto table = kernels::rank_rows(matrix, Exec::serial);
  std::vector<std::size_t> best(matrix.rows());
  for (std::size_t r = 0; r < matrix.rows(); ++r) {
    auto order = table.row(r);
    best[r] = order.size() + 1;
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
      if (in_d1[order[pos]]) {
        best[r] = pos + 1;
        break;
      }
    }
  }
  std::vector<std::size_t> idx(matrix.rows());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return best[a] > best[b]; });
  std::vector<WeakPoint> out;
  for (std::size_t i = 0; i < m; ++i) out.push_back({matrix.row_ids()[idx[i]], best[idx[i]]});
  return out;
}

std::vector<std::string> uncertainty_stage(const SimilarityMatrix& matrix, std::span<const std::string> d1,
                                           std::size_t k, std::size_t x, std::size_t m, Exec exec,
                                           std::vector<TraceEntry>* trace) {
  check_horizon(k, x);
  if (m == 0) return {};
  const auto weak = weak_test_points(matrix, d1, m);
  if (m + d1.size() > matrix.cols())
    throw std::invalid_argument("uncertainty stage asks for " + std::to_string(m) + " picks but only " +
                                std::to_string(matrix.cols() - std::min(matrix.cols(), d1.size())) +
                                " candidates remain");
  std::vector<std::string> rows;
  for (const auto& w : weak) {
    rows.push_back(w.id);
    if (trace) trace->push_back({"uncertainty", "weak_point", w.id, static_cast<double>(w.best_rank)});
  }
  const auto reduced = drop_columns(select_rows(matrix, rows), d1);
  const auto table = sum_rank_scores(reduced, k, x, exec);
  std::vector<std::string> picks;
  for (std::size_t c : top_by_score(table.scores, m)) {
    picks.push_back(table.ids[c]);
    if (trace) trace->push_back({"uncertainty", "pick", table.ids[c], table.scores[c]});
  }
  return picks;
}

SelectionResult allabel_select(const Dataset& dataset, const SimilarityMatrix& matrix, std::size_t budget,
                               const SelectConfig& config) {
  require_square(matrix);
  if (matrix.row_ids() != dataset.ids()) throw std::invalid_argument("matrix ids do not follow dataset order");
  if (budget > dataset.size())
    throw std::invalid_argument("budget " + std::to_string(budget) + " exceeds the " +
                                std::to_string(dataset.size()) + " available samples");

  SelectionResult result;
  result.strategy = "allabel";
  result.order = to_string(config.order);
  result.budget = split_budget(budget, config.proportion);
  result.k = config.k;
  const std::size_t m_div = result.budget.stage_sizes[0];
  const std::size_t m_sim = result.budget.stage_sizes[1];
  const std::size_t m_unc = result.budget.stage_sizes[2];
  const std::size_t x = sum_rank_horizon(m_sim, config.k);
  result.x = x;

  std::vector<std::string> selected;
  for (StageKind kind : stages_of(config.order)) {
    std::vector<std::string> picks;
    switch (kind) {
      case StageKind::diversity:
        picks = diversity_stage(matrix, m_div, selected, config.exec, &result.trace);
        break;
      case StageKind::similarity: {
        const auto s = selected.empty() ? matrix : drop_columns(matrix, selected);
        picks = similarity_stage(s, config.k, x, m_sim, config.exec, &result.trace);
        break;
      }
      case StageKind::uncertainty:
        if (m_unc > 0 && selected.empty())
          throw std::invalid_argument("uncertainty stage needs earlier selections");
        picks = uncertainty_stage(matrix, selected, config.k, x, m_unc, config.exec, &result.trace);
        break;
    }
    selected.insert(selected.end(), picks.begin(), picks.end());
    result.stages.push_back({std::string(stage_name(kind)), std::move(picks)});
  }
  check_selection(result);
  return result;
}

std::vector<std::string> random_select(const Dataset& dataset, std::size_t budget, std::uint64_t seed) {
  if (budget > dataset.size())
    throw std::invalid_argument("budget " + std::to_string(budget) + " exceeds the " +
                                std::to_string(dataset.size()) + " available samples");
  std::vector<std::string> ids = dataset.ids();
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < budget; ++i) {
    const std::size_t j = i + uniform_index(rng, ids.size() - i);
    std::swap(ids[i], ids[j]);
  }
  ids.resize(budget);
  return ids;
}

std::vector<std::string> coldstart_coreset(const SimilarityMatrix& square, std::size_t budget, std::uint64_t seed,
                                           Exec exec) {
  require_square(square);
  const std::size_t n = square.rows();
  if (budget > n)
    throw std::invalid_argument("budget " + std::to_string(budget) + " exceeds the " + std::to_string(n) +
                                " available samples");
  if (budget == 0) return {};
  std::mt19937_64 rng(seed);
  const std::size_t first = uniform_index(rng, n);
  std::vector<char> chosen(n, 0);
  std::vector<double> min_dist(n, std::numeric_limits<double>::infinity());
  chosen[first] = 1;
  kernels::relax_min_distance(square, first, min_dist, exec);
  std::vector<std::string> picks{square.row_ids()[first]};
  auto rest = greedy_coreset(square, budget - 1, chosen, min_dist, exec, "coreset", nullptr);
  picks.insert(picks.end(), rest.begin(), rest.end());
  return picks;
}

std::vector<std::string> perplexity_select(const Dataset& dataset, std::size_t budget, Annotator& annotator,
                                           const PromptTemplate& tmpl, std::size_t max_in_flight) {
  if (!annotator.supports_logprobs())
    throw CapabilityError("annotator '" + annotator.id() + "' does not return token log-probabilities");
  if (budget > dataset.size())
    throw std::invalid_argument("budget " + std::to_string(budget) + " exceeds the " +
                                std::to_string(dataset.size()) + " available samples");
  std::vector<AnnotationRequest> requests;
  requests.reserve(dataset.size());
  for (const auto& s : dataset.samples())
    requests.push_back({s.id, assemble_prompt(tmpl, {}, s.text, dataset.schema()), {}});
  const auto outcomes = annotate_all(annotator, requests, max_in_flight);

  std::vector<double> pp(outcomes.size());
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    if (!outcomes[i].completion)
      throw AnnotatorError("zero-shot pass failed for '" + requests[i].sample_id + "': " + outcomes[i].error);
    pp[i] = entity_perplexity(*outcomes[i].completion, dataset.schema());
  }
  std::vector<std::string> out;
  for (std::size_t i : top_by_score(pp, budget)) out.push_back(dataset.samples()[i].id);
  return out;
}

SelectionResult single_stage_result(std::string strategy, std::vector<std::string> ids,
                                    std::optional<std::uint64_t> seed) {
  SelectionResult r;
  r.strategy = strategy;
  r.seed = seed;
  r.budget.total = ids.size();
  r.budget.proportion = {1};
  r.budget.stage_sizes = {ids.size()};
  r.stages.push_back({std::move(strategy), std::move(ids)});
  check_selection(r);
  return r;
}

}  // namespace allabel
