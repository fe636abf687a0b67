#include <algorithm>
#include <cctype>
#include <numeric>
#include <stdexcept>
#include <string>

#include "allabel/selection.hpp"

namespace allabel {

Budget split_budget(std::size_t total, std::array<unsigned, 3> proportion) {
  for (unsigned p : proportion)
    if (p == 0) throw std::invalid_argument("proportion parts must be positive");
  if (total < proportion.size())
    throw std::invalid_argument("budget " + std::to_string(total) + " is smaller than the number of stages (" +
                                std::to_string(proportion.size()) + ")");

  const std::size_t denom = std::accumulate(proportion.begin(), proportion.end(), std::size_t{0});
  Budget b;
  b.total = total;
  b.proportion.assign(proportion.begin(), proportion.end());
  b.stage_sizes.resize(proportion.size());

  std::vector<std::size_t> remainder(proportion.size());
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < proportion.size(); ++i) {
    const std::size_t scaled = total * proportion[i];
    b.stage_sizes[i] = scaled / denom;
    remainder[i] = scaled % denom;
    assigned += b.stage_sizes[i];
  }

  std::vector<std::size_t> order(proportion.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t c) { return remainder[a] > remainder[c]; });
  for (std::size_t i = 0; assigned < total; ++i, ++assigned) ++b.stage_sizes[order[i]];
  return b;
}

std::string_view stage_name(StageKind kind) {
  switch (kind) {
    case StageKind::diversity:
      return "diversity";
    case StageKind::similarity:
      return "similarity";
    case StageKind::uncertainty:
      return "uncertainty";
  }
  return "unknown";
}

std::string to_string(StageOrder order) {
  switch (order) {
    case StageOrder::dsu:
      return "d-s-u";
    case StageOrder::sdu:
      return "s-d-u";
    case StageOrder::sud:
      return "s-u-d";
  }
  return "unknown";
}

StageOrder parse_order(std::string_view text) {
  std::string letters;
  for (char c : text) {
    if (c == '-' || c == ' ') continue;
    letters.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  if (letters == "dsu") return StageOrder::dsu;
  if (letters == "sdu") return StageOrder::sdu;
  if (letters == "sud") return StageOrder::sud;
  throw std::invalid_argument("unknown stage order '" + std::string(text) + "' (expected d-s-u, s-d-u or s-u-d)");
}

std::array<StageKind, 3> stages_of(StageOrder order) {
  using enum StageKind;
  switch (order) {
    case StageOrder::dsu:
      return {diversity, similarity, uncertainty};
    case StageOrder::sdu:
      return {similarity, diversity, uncertainty};
    case StageOrder::sud:
      return {similarity, uncertainty, diversity};
  }
  return {diversity, similarity, uncertainty};
}

std::size_t sum_rank_horizon(std::size_t similarity_size, std::size_t k) {
  return std::max(similarity_size, k + 1);
}

}  // namespace allabel
