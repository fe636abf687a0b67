#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "allabel/corpus.hpp"
#include "allabel/similarity.hpp"

namespace allabel {

/// Instruction blocks of an extraction prompt. Text may contain the
/// placeholders {{entity_types}} (quoted, comma-separated type names) and
/// {{schema}} (one line per type listing its attributes); instantiate()
/// substitutes them.
struct PromptTemplate {
  std::string role;
  std::string task;
  std::string background;
  std::string format;

  /// Plain text with [ROLE], [TASK], [BACKGROUND] and [FORMAT] marker lines;
  /// each block runs until the next marker and is trimmed. All four blocks
  /// must be present and non-empty.
  static PromptTemplate parse(std::string_view text);
  static PromptTemplate load(const std::filesystem::path& path);
  /// Bundled default, already instantiated for `schema`.
  static PromptTemplate default_for(const DatasetSchema& schema);

  PromptTemplate instantiate(const DatasetSchema& schema) const;
  std::string to_text() const;

  bool operator==(const PromptTemplate&) const = default;
};

struct Demonstration {
  std::string id;
  std::string text;
  Annotations annotations;
  double score = 0.0;  // similarity to the query it was retrieved for
};

struct KShotRetrieval {
  std::vector<RankedCandidate> picks;  // most similar first, rank = position among pool members
  bool short_pool = false;             // fewer than k candidates were available
};

/// Top-k of the query's row restricted to `pool_ids`, never including the
/// query itself; ties by column position. Throws if no candidate remains.
KShotRetrieval retrieve_kshots(const SimilarityMatrix& matrix, std::string_view query_id,
                               std::span<const std::string> pool_ids, std::size_t k);

/// Attaches text and labels to retrieved picks. Throws Error when a pick has
/// no label in `labels`.
std::vector<Demonstration> make_demonstrations(const KShotRetrieval& retrieval, const Dataset& dataset,
                                               const AnnotationMap& labels);

/// Compact single-line JSON table list, every schema type present.
std::string render_annotations(const Annotations& annotations, const DatasetSchema& schema);

/// Role, task, background and format blocks, then numbered Input i / Output i
/// pairs in retrieval order, then the query as the final Input.
std::string assemble_prompt(const PromptTemplate& tmpl, std::span<const Demonstration> demonstrations,
                            std::string_view query_text, const DatasetSchema& schema);

}  // namespace allabel
