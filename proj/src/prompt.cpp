#include "allabel/prompt.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>

#include "allabel/error.hpp"
#include "allabel/util.hpp"

namespace allabel {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  for (std::size_t pos = 0; (pos = s.find(from, pos)) != std::string::npos; pos += to.size())
    s.replace(pos, from.size(), to);
}

constexpr std::string_view kDefaultTemplate = R"([ROLE]
You are a domain expert with many years of experience reading scientific literature and extracting key facts from it precisely and systematically.

[TASK]
Extract the following entity types from the input text and summarize them as a JSON table: {{entity_types}}. Quantities belonging to an entity must be reported together with the entity.

[BACKGROUND]
Each entity type and the attributes to report for it:
{{schema}}
Report only what the text states. If an entity type does not occur in the text, give it an empty list.

[FORMAT]
The output must be a JSON list containing one JSON object. Each key of the object is an entity type and each value is a list of records; a record maps attribute names to string values. Output the JSON only.
)";

}  // namespace

PromptTemplate PromptTemplate::parse(std::string_view text) {
  static constexpr std::array<std::string_view, 4> kMarkers{"[ROLE]", "[TASK]", "[BACKGROUND]", "[FORMAT]"};
  std::array<std::string, 4> blocks;
  std::array<bool, 4> seen{};
  int current = -1;
  std::string buffer;
  auto flush = [&] {
    if (current >= 0) blocks[static_cast<std::size_t>(current)] = trim(buffer);
    buffer.clear();
  };
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    const std::string marker = trim(line);
    auto it = std::find(kMarkers.begin(), kMarkers.end(), marker);
    if (it != kMarkers.end()) {
      flush();
      current = static_cast<int>(it - kMarkers.begin());
      if (seen[static_cast<std::size_t>(current)]) throw ParseError("<template>", "duplicate section " + marker);
      seen[static_cast<std::size_t>(current)] = true;
    } else if (current >= 0) {
      buffer.append(line);
      buffer.push_back('\n');
    } else if (!marker.empty()) {
      throw ParseError("<template>", "text before the first section marker");
    }
    if (end == text.size()) break;
    start = end + 1;
  }
  flush();
  for (std::size_t i = 0; i < kMarkers.size(); ++i) {
    if (!seen[i]) throw ParseError("<template>", "missing section " + std::string(kMarkers[i]));
    if (blocks[i].empty()) throw ParseError("<template>", "empty section " + std::string(kMarkers[i]));
  }
  return {blocks[0], blocks[1], blocks[2], blocks[3]};
}

PromptTemplate PromptTemplate::load(const std::filesystem::path& path) {
  try {
    return parse(read_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string(), e.what());
  }
}

PromptTemplate PromptTemplate::default_for(const DatasetSchema& schema) {
  return parse(kDefaultTemplate).instantiate(schema);
}

PromptTemplate PromptTemplate::instantiate(const DatasetSchema& schema) const {
  std::string types;
  std::string listing;
  for (const auto& t : schema.entity_types()) {
    if (!types.empty()) types += ", ";
    types += "\"" + t.name + "\"";
    listing += "- " + t.name + ":";
    for (std::size_t i = 0; i < t.attributes.size(); ++i) listing += (i ? ", " : " ") + t.attributes[i];
    listing += "\n";
  }
  if (!listing.empty()) listing.pop_back();
  PromptTemplate out = *this;
  for (std::string* block : {&out.role, &out.task, &out.background, &out.format}) {
    replace_all(*block, "{{entity_types}}", types);
    replace_all(*block, "{{schema}}", listing);
  }
  return out;
}

std::string PromptTemplate::to_text() const {
  return "[ROLE]\n" + role + "\n\n[TASK]\n" + task + "\n\n[BACKGROUND]\n" + background + "\n\n[FORMAT]\n" + format +
         "\n";
}

KShotRetrieval retrieve_kshots(const SimilarityMatrix& matrix, std::string_view query_id,
                               std::span<const std::string> pool_ids, std::size_t k) {
  if (k == 0) throw std::invalid_argument("k must be at least 1");
  auto row = matrix.row_index(query_id);
  if (!row) throw std::invalid_argument("unknown query id '" + std::string(query_id) + "'");
  std::vector<std::size_t> cols;
  cols.reserve(pool_ids.size());
  for (const auto& id : pool_ids) {
    auto c = matrix.col_index(id);
    if (!c) throw std::invalid_argument("pool id '" + id + "' is not a matrix column");
    if (id == query_id || matrix.masked(*row, *c)) continue;
    cols.push_back(*c);
  }
  std::sort(cols.begin(), cols.end());
  cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
  if (cols.empty()) throw Error("no demonstration candidates for '" + std::string(query_id) + "'");
  auto scores = matrix.row(*row);
  const std::size_t take = std::min(k, cols.size());
  std::partial_sort(cols.begin(), cols.begin() + static_cast<std::ptrdiff_t>(take), cols.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (scores[a] != scores[b]) return scores[a] > scores[b];
                      return a < b;
                    });
  KShotRetrieval out;
  out.short_pool = cols.size() < k;
  for (std::size_t i = 0; i < take; ++i) out.picks.push_back({matrix.col_ids()[cols[i]], scores[cols[i]], i + 1});
  return out;
}

std::vector<Demonstration> make_demonstrations(const KShotRetrieval& retrieval, const Dataset& dataset,
                                               const AnnotationMap& labels) {
  std::vector<Demonstration> out;
  out.reserve(retrieval.picks.size());
  for (const auto& pick : retrieval.picks) {
    auto it = labels.find(pick.id);
    if (it == labels.end()) throw Error("demonstration '" + pick.id + "' has no annotation");
    out.push_back({pick.id, dataset.sample(pick.id).text, it->second.annotations, pick.score});
  }
  return out;
}

std::string render_annotations(const Annotations& annotations, const DatasetSchema& schema) {
  return annotations_to_json(complete_annotations(annotations, schema), schema).dump();
}

std::string assemble_prompt(const PromptTemplate& tmpl, std::span<const Demonstration> demonstrations,
                            std::string_view query_text, const DatasetSchema& schema) {
  std::string out;
  for (const std::string* block : {&tmpl.role, &tmpl.task, &tmpl.background, &tmpl.format}) {
    out += *block;
    out += "\n\n";
  }
  std::size_t i = 1;
  for (const auto& demo : demonstrations) {
    const std::string n = std::to_string(i++);
    out += "Input " + n + ": " + demo.text + "\n";
    out += "Output " + n + ": " + render_annotations(demo.annotations, schema) + "\n\n";
  }
  out += "Input " + std::to_string(i) + ": ";
  out += query_text;
  out += "\n";
  return out;
}

}  // namespace allabel
