#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"

namespace allabel {

/// One unlabeled text segment. Dataset order is the identity basis for every
/// deterministic tie-break downstream, so it is preserved exactly as loaded.
struct Sample {
  std::string id;
  std::string text;
  std::optional<std::string> doc_id;

  bool operator==(const Sample&) const = default;
};

/// attribute name -> value, e.g. {"precursor_name": "AgNO3", "amount": "0.2 mmol"}
using EntityRecord = std::map<std::string, std::string>;

/// entity type -> records. An empty vector means "entity absent" and is kept
/// explicitly so TN/FN accounting is well defined.
using Annotations = std::map<std::string, std::vector<EntityRecord>>;

struct AnnotatedSample {
  std::string id;
  Annotations annotations;

  bool operator==(const AnnotatedSample&) const = default;
};

/// sample id -> annotations
using AnnotationMap = std::map<std::string, AnnotatedSample>;

struct EntityType {
  std::string name;
  std::vector<std::string> attributes;

  bool operator==(const EntityType&) const = default;
};

class DatasetSchema {
 public:
  DatasetSchema() = default;
  explicit DatasetSchema(std::vector<EntityType> types);

  const std::vector<EntityType>& entity_types() const { return types_; }
  std::size_t size() const { return types_.size(); }
  const EntityType* find(std::string_view name) const;
  std::vector<std::string> names() const;

  bool operator==(const DatasetSchema& other) const { return types_ == other.types_; }

 private:
  std::vector<EntityType> types_;
};

class Dataset {
 public:
  /// Throws Error on duplicate sample ids or gold ids that are not sample ids.
  Dataset(DatasetSchema schema, std::vector<Sample> samples, AnnotationMap gold = {});

  const DatasetSchema& schema() const { return schema_; }
  const std::vector<Sample>& samples() const { return samples_; }
  std::size_t size() const { return samples_.size(); }
  const AnnotationMap& gold() const { return gold_; }

  std::optional<std::size_t> position(std::string_view id) const;
  const Sample& sample(std::string_view id) const;
  const Annotations* gold_for(std::string_view id) const;
  std::vector<std::string> ids() const;

 private:
  DatasetSchema schema_;
  std::vector<Sample> samples_;
  AnnotationMap gold_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct Violation {
  std::string sample_id;  // empty for dataset-level problems
  std::string message;
};
using ValidationReport = std::vector<Violation>;

DatasetSchema parse_schema(const nlohmann::json& j);
DatasetSchema load_schema(const std::filesystem::path& path);
nlohmann::json schema_to_json(const DatasetSchema& schema);

/// Loads a line-delimited sample file. Lines may carry an inline
/// "annotations" object, which becomes the dataset's gold labels.
Dataset load_dataset(const std::filesystem::path& samples_path,
                     const std::filesystem::path& schema_path);
Dataset load_dataset(const std::filesystem::path& samples_path, DatasetSchema schema);

/// Loads `{"id", "annotations"}` lines. Unknown entity types or attributes
/// are rejected with SchemaError; parse failures report the line number.
AnnotationMap load_annotations(const std::filesystem::path& path, const DatasetSchema& schema);

/// Returns a copy of `dataset` whose gold labels are `gold`.
Dataset with_gold(const Dataset& dataset, AnnotationMap gold);

/// Gold labels, when present, are written inline.
void save_samples(const Dataset& dataset, const std::filesystem::path& path);
/// Writes annotations in dataset order (ids not in the dataset go last, sorted).
void save_annotations(const AnnotationMap& annotations, const Dataset& dataset,
                      const std::filesystem::path& path);

ValidationReport validate(const Dataset& dataset);
/// Record-level checks shared by dataset validation and output parsing.
ValidationReport validate_annotations(const std::string& sample_id, const Annotations& annotations,
                                      const DatasetSchema& schema);

/// Fills in an explicit empty list for every schema entity type missing from
/// `annotations`.
Annotations complete_annotations(Annotations annotations, const DatasetSchema& schema);

/// `[{"Type": [{"attr": "value"}]}]`, types in schema order, attributes in
/// schema order. Types outside the schema are appended in name order.
nlohmann::ordered_json annotations_to_json(const Annotations& annotations, const DatasetSchema& schema);

enum class DedupMode {
  drop_shared,  // remove every sample whose doc_id is shared with another sample
  keep_first,   // keep the first sample per doc_id
};

/// Opt-in preprocessing keyed on the optional doc_id. Samples without a doc_id
/// are always kept.
Dataset deduplicate_by_doc(const Dataset& dataset, DedupMode mode);

}  // namespace allabel
