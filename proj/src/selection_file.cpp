#include <stdexcept>

#include "allabel/error.hpp"
#include "allabel/selection.hpp"
#include "allabel/util.hpp"
#include "json.hpp"

namespace allabel {

using ojson = nlohmann::ordered_json;

std::string selection_to_json(const SelectionResult& result) {
  check_selection(result);
  ojson j;
  j["strategy"] = result.strategy;
  if (result.order) j["order"] = *result.order;
  if (result.k) j["k"] = *result.k;
  if (result.x) j["x"] = *result.x;
  if (result.seed) j["seed"] = *result.seed;
  j["budget"] = {{"M", result.budget.total},
                 {"proportion", result.budget.proportion},
                 {"stage_sizes", result.budget.stage_sizes}};
  j["stages"] = ojson::array();
  for (const auto& s : result.stages) j["stages"].push_back({{"name", s.name}, {"ids", s.ids}});
  j["trace"] = ojson::array();
  for (const auto& t : result.trace)
    j["trace"].push_back({{"stage", t.stage}, {"kind", t.kind}, {"id", t.id}, {"score", t.score}});
  return j.dump(2) + "\n";
}

SelectionResult selection_from_json(std::string_view text) {
  ojson j;
  try {
    j = ojson::parse(text);
  } catch (const ojson::parse_error& e) {
    throw ParseError("selection", e.what());
  }
  SelectionResult r;
  try {
    r.strategy = j.at("strategy").get<std::string>();
    if (j.contains("order")) r.order = j["order"].get<std::string>();
    if (j.contains("k")) r.k = j["k"].get<std::size_t>();
    if (j.contains("x")) r.x = j["x"].get<std::size_t>();
    if (j.contains("seed")) r.seed = j["seed"].get<std::uint64_t>();
    const auto& b = j.at("budget");
    r.budget.total = b.at("M").get<std::size_t>();
    r.budget.proportion = b.at("proportion").get<std::vector<unsigned>>();
    r.budget.stage_sizes = b.at("stage_sizes").get<std::vector<std::size_t>>();
    for (const auto& s : j.at("stages"))
      r.stages.push_back({s.at("name").get<std::string>(), s.at("ids").get<std::vector<std::string>>()});
    if (j.contains("trace"))
      for (const auto& t : j["trace"])
        r.trace.push_back({t.at("stage").get<std::string>(), t.at("kind").get<std::string>(),
                           t.at("id").get<std::string>(), t.at("score").get<double>()});
  } catch (const ojson::exception& e) {
    throw SchemaError(std::string("malformed selection file: ") + e.what());
  }
  try {
    check_selection(r);
  } catch (const std::invalid_argument& e) {
    throw SchemaError(std::string("inconsistent selection file: ") + e.what());
  }
  return r;
}

void save_selection(const SelectionResult& result, const std::filesystem::path& path) {
  write_file(path, selection_to_json(result));
}

SelectionResult load_selection(const std::filesystem::path& path) {
  return selection_from_json(read_file(path));
}

}  // namespace allabel
