#include "allabel/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "allabel/error.hpp"
#include "allabel/util.hpp"

namespace allabel {

using nlohmann::json;

DatasetSchema::DatasetSchema(std::vector<EntityType> types) : types_(std::move(types)) {
  if (types_.empty()) throw SchemaError("schema has no entity types");
  std::set<std::string> seen;
  for (const auto& t : types_) {
    if (t.name.empty()) throw SchemaError("schema entity type with empty name");
    if (!seen.insert(t.name).second) throw SchemaError("duplicate entity type '" + t.name + "'");
    std::set<std::string> attrs;
    for (const auto& a : t.attributes) {
      if (!attrs.insert(a).second)
        throw SchemaError("duplicate attribute '" + a + "' in entity type '" + t.name + "'");
    }
  }
}

const EntityType* DatasetSchema::find(std::string_view name) const {
  for (const auto& t : types_)
    if (t.name == name) return &t;
  return nullptr;
}

std::vector<std::string> DatasetSchema::names() const {
  std::vector<std::string> out;
  out.reserve(types_.size());
  for (const auto& t : types_) out.push_back(t.name);
  return out;
}

Dataset::Dataset(DatasetSchema schema, std::vector<Sample> samples, AnnotationMap gold)
    : schema_(std::move(schema)), samples_(std::move(samples)), gold_(std::move(gold)) {
  index_.reserve(samples_.size());
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    if (!index_.emplace(samples_[i].id, i).second)
      throw Error("duplicate sample id '" + samples_[i].id + "'");
  }
  for (const auto& [id, ann] : gold_) {
    if (!index_.contains(id)) throw Error("gold annotation for unknown sample id '" + id + "'");
  }
}

std::optional<std::size_t> Dataset::position(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

const Sample& Dataset::sample(std::string_view id) const {
  auto pos = position(id);
  if (!pos) throw std::out_of_range("unknown sample id '" + std::string(id) + "'");
  return samples_[*pos];
}

const Annotations* Dataset::gold_for(std::string_view id) const {
  auto it = gold_.find(std::string(id));
  return it == gold_.end() ? nullptr : &it->second.annotations;
}

std::vector<std::string> Dataset::ids() const {
  std::vector<std::string> out;
  out.reserve(samples_.size());
  for (const auto& s : samples_) out.push_back(s.id);
  return out;
}

DatasetSchema parse_schema(const json& j) {
  if (!j.is_object() || !j.contains("entity_types") || !j["entity_types"].is_array())
    throw SchemaError("schema must be an object with an 'entity_types' array");
  std::vector<EntityType> types;
  for (const auto& e : j["entity_types"]) {
    if (!e.is_object() || !e.contains("name") || !e["name"].is_string())
      throw SchemaError("schema entity type needs a string 'name'");
    EntityType t{e["name"].get<std::string>(), {}};
    if (e.contains("attributes")) {
      if (!e["attributes"].is_array()) throw SchemaError("'attributes' of '" + t.name + "' must be an array");
      for (const auto& a : e["attributes"]) {
        if (!a.is_string()) throw SchemaError("attribute names of '" + t.name + "' must be strings");
        t.attributes.push_back(a.get<std::string>());
      }
    }
    types.push_back(std::move(t));
  }
  return DatasetSchema(std::move(types));
}

DatasetSchema load_schema(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string(), e.what());
  }
  return parse_schema(j);
}

json schema_to_json(const DatasetSchema& schema) {
  json types = json::array();
  for (const auto& t : schema.entity_types()) types.push_back({{"name", t.name}, {"attributes", t.attributes}});
  return {{"entity_types", types}};
}

namespace {

// Parses an annotations object ({"Type": [{"attr": "v"}]}) strictly against the schema.
Annotations parse_annotation_object(const json& obj, const DatasetSchema& schema, const std::string& where) {
  if (!obj.is_object()) throw ParseError(where, "'annotations' must be an object");
  Annotations out;
  for (const auto& [type, records] : obj.items()) {
    const EntityType* et = schema.find(type);
    if (!et) throw SchemaError(where + ": entity type '" + type + "' is not in the schema");
    if (!records.is_array()) throw ParseError(where, "records of '" + type + "' must be an array");
    auto& list = out[type];
    for (const auto& r : records) {
      if (!r.is_object()) throw ParseError(where, "each record of '" + type + "' must be an object");
      EntityRecord rec;
      for (const auto& [attr, value] : r.items()) {
        if (std::find(et->attributes.begin(), et->attributes.end(), attr) == et->attributes.end())
          throw SchemaError(where + ": attribute '" + attr + "' is not defined for '" + type + "'");
        if (!value.is_string()) throw ParseError(where, "attribute '" + attr + "' must be a string");
        rec.emplace(attr, value.get<std::string>());
      }
      list.push_back(std::move(rec));
    }
  }
  return out;
}

template <typename Fn>
void for_each_line(const std::filesystem::path& path, Fn&& fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(path.string(), lineno, e.what());
    }
    if (!j.is_object()) throw ParseError(path.string(), lineno, "expected a JSON object");
    fn(j, lineno);
  }
}

std::string required_string(const json& j, const char* key, const std::string& file, std::size_t line) {
  if (!j.contains(key) || !j[key].is_string())
    throw ParseError(file, line, std::string("missing string field '") + key + "'");
  return j[key].get<std::string>();
}

}  // namespace

Dataset load_dataset(const std::filesystem::path& samples_path, DatasetSchema schema) {
  std::vector<Sample> samples;
  AnnotationMap gold;
  std::set<std::string> seen;
  const std::string file = samples_path.string();
  for_each_line(samples_path, [&](const json& j, std::size_t line) {
    Sample s;
    s.id = required_string(j, "id", file, line);
    s.text = required_string(j, "text", file, line);
    if (j.contains("doc_id") && !j["doc_id"].is_null()) {
      if (!j["doc_id"].is_string()) throw ParseError(file, line, "'doc_id' must be a string");
      s.doc_id = j["doc_id"].get<std::string>();
    }
    if (!seen.insert(s.id).second) throw Error(file + ":" + std::to_string(line) + ": duplicate id '" + s.id + "'");
    if (j.contains("annotations")) {
      gold[s.id] = AnnotatedSample{
          s.id, parse_annotation_object(j["annotations"], schema, file + ":" + std::to_string(line))};
    }
    samples.push_back(std::move(s));
  });
  if (samples.empty()) throw Error(file + ": no samples");
  return Dataset(std::move(schema), std::move(samples), std::move(gold));
}

Dataset load_dataset(const std::filesystem::path& samples_path, const std::filesystem::path& schema_path) {
  return load_dataset(samples_path, load_schema(schema_path));
}

AnnotationMap load_annotations(const std::filesystem::path& path, const DatasetSchema& schema) {
  AnnotationMap out;
  const std::string file = path.string();
  for_each_line(path, [&](const json& j, std::size_t line) {
    std::string id = required_string(j, "id", file, line);
    if (!j.contains("annotations")) throw ParseError(file, line, "missing 'annotations'");
    if (out.contains(id)) throw Error(file + ":" + std::to_string(line) + ": duplicate id '" + id + "'");
    out[id] = AnnotatedSample{id, parse_annotation_object(j["annotations"], schema, file + ":" + std::to_string(line))};
  });
  return out;
}

Dataset with_gold(const Dataset& dataset, AnnotationMap gold) {
  return Dataset(dataset.schema(), dataset.samples(), std::move(gold));
}

namespace {

nlohmann::ordered_json annotation_object(const Annotations& ann, const DatasetSchema& schema) {
  // annotations_to_json wraps one table in an array; unwrap it.
  return annotations_to_json(ann, schema).at(0);
}

}  // namespace

void save_samples(const Dataset& dataset, const std::filesystem::path& path) {
  std::string out;
  for (const auto& s : dataset.samples()) {
    nlohmann::ordered_json j;
    j["id"] = s.id;
    j["text"] = s.text;
    if (s.doc_id) j["doc_id"] = *s.doc_id;
    if (const Annotations* gold = dataset.gold_for(s.id)) j["annotations"] = annotation_object(*gold, dataset.schema());
    out += j.dump();
    out += '\n';
  }
  write_file(path, out);
}

void save_annotations(const AnnotationMap& annotations, const Dataset& dataset,
                      const std::filesystem::path& path) {
  std::string out;
  auto emit = [&](const AnnotatedSample& a) {
    nlohmann::ordered_json j;
    j["id"] = a.id;
    j["annotations"] = annotation_object(a.annotations, dataset.schema());
    out += j.dump();
    out += '\n';
  };
  std::set<std::string> done;
  for (const auto& s : dataset.samples()) {
    auto it = annotations.find(s.id);
    if (it == annotations.end()) continue;
    emit(it->second);
    done.insert(s.id);
  }
  for (const auto& [id, a] : annotations)
    if (!done.contains(id)) emit(a);
  write_file(path, out);
}

ValidationReport validate_annotations(const std::string& sample_id, const Annotations& annotations,
                                      const DatasetSchema& schema) {
  ValidationReport report;
  for (const auto& t : schema.entity_types()) {
    if (!annotations.contains(t.name))
      report.push_back({sample_id, "missing entity type key '" + t.name + "'"});
  }
  for (const auto& [type, records] : annotations) {
    const EntityType* et = schema.find(type);
    if (!et) {
      report.push_back({sample_id, "unknown entity type '" + type + "'"});
      continue;
    }
    for (std::size_t r = 0; r < records.size(); ++r) {
      const auto& rec = records[r];
      const std::string where = type + "[" + std::to_string(r) + "]";
      if (rec.empty()) report.push_back({sample_id, where + " has no attributes"});
      for (const auto& [attr, value] : rec) {
        if (std::find(et->attributes.begin(), et->attributes.end(), attr) == et->attributes.end())
          report.push_back({sample_id, where + " has unknown attribute '" + attr + "'"});
      }
    }
  }
  return report;
}

ValidationReport validate(const Dataset& dataset) {
  ValidationReport report;
  if (dataset.size() == 0) report.push_back({"", "dataset has no samples"});
  if (dataset.schema().size() == 0) report.push_back({"", "schema has no entity types"});
  for (const auto& s : dataset.samples()) {
    if (s.id.empty()) report.push_back({s.id, "empty id"});
    if (s.text.empty()) report.push_back({s.id, "empty text"});
  }
  for (const auto& s : dataset.samples()) {
    const Annotations* ann = dataset.gold_for(s.id);
    if (!ann) continue;
    auto r = validate_annotations(s.id, *ann, dataset.schema());
    report.insert(report.end(), r.begin(), r.end());
  }
  return report;
}

Annotations complete_annotations(Annotations annotations, const DatasetSchema& schema) {
  for (const auto& t : schema.entity_types()) annotations.try_emplace(t.name);
  return annotations;
}

nlohmann::ordered_json annotations_to_json(const Annotations& annotations, const DatasetSchema& schema) {
  auto record_json = [](const EntityRecord& rec, const EntityType* et) {
    nlohmann::ordered_json r = nlohmann::ordered_json::object();
    if (et) {
      for (const auto& a : et->attributes) {
        auto it = rec.find(a);
        if (it != rec.end()) r[a] = it->second;
      }
    }
    for (const auto& [a, v] : rec)
      if (!r.contains(a)) r[a] = v;
    return r;
  };
  nlohmann::ordered_json table = nlohmann::ordered_json::object();
  auto emit_type = [&](const std::string& name, const std::vector<EntityRecord>& records) {
    nlohmann::ordered_json list = nlohmann::ordered_json::array();
    const EntityType* et = schema.find(name);
    for (const auto& rec : records) list.push_back(record_json(rec, et));
    table[name] = std::move(list);
  };
  for (const auto& t : schema.entity_types()) {
    auto it = annotations.find(t.name);
    if (it != annotations.end()) emit_type(t.name, it->second);
  }
  for (const auto& [name, records] : annotations)
    if (!schema.find(name)) emit_type(name, records);
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  out.push_back(std::move(table));
  return out;
}

Dataset deduplicate_by_doc(const Dataset& dataset, DedupMode mode) {
  std::map<std::string, std::size_t> counts;
  for (const auto& s : dataset.samples())
    if (s.doc_id) ++counts[*s.doc_id];
  std::vector<Sample> kept;
  std::set<std::string> seen_docs;
  AnnotationMap gold;
  for (const auto& s : dataset.samples()) {
    bool keep = true;
    if (s.doc_id) {
      if (mode == DedupMode::drop_shared)
        keep = counts[*s.doc_id] == 1;
      else
        keep = seen_docs.insert(*s.doc_id).second;
    }
    if (!keep) continue;
    if (auto it = dataset.gold().find(s.id); it != dataset.gold().end()) gold.emplace(it->first, it->second);
    kept.push_back(s);
  }
  return Dataset(dataset.schema(), std::move(kept), std::move(gold));
}

}  // namespace allabel
