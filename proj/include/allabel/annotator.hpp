#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "allabel/corpus.hpp"
#include "allabel/prompt.hpp"
#include "json.hpp"

namespace allabel {

struct TokenLogprob {
  std::string token;
  double logprob;  // natural log, <= 0
  bool operator==(const TokenLogprob&) const = default;
};

struct Usage {
  long prompt_tokens = 0;
  long completion_tokens = 0;
  bool operator==(const Usage&) const = default;
};

struct Completion {
  std::string text;
  std::optional<std::vector<TokenLogprob>> token_logprobs;
  Usage usage;
  bool operator==(const Completion&) const = default;
};

nlohmann::json completion_to_json(const Completion& c);
Completion completion_from_json(const nlohmann::json& j);

/// Everything a backend may need for one query. Live backends only read the
/// prompt; the simulator reads the demonstrations and the query id.
struct AnnotationRequest {
  std::string sample_id;
  std::string prompt;
  std::vector<Demonstration> demonstrations;
};

class Annotator {
 public:
  virtual ~Annotator() = default;
  /// Stable identifier used in cache keys and logs.
  virtual std::string id() const = 0;
  virtual bool supports_logprobs() const = 0;
  /// Must be safe to call concurrently.
  virtual Completion annotate(const AnnotationRequest& request) = 0;
};

/// exp of the negative mean token log-probability. Throws CapabilityError when
/// the completion carries no log-probabilities, std::invalid_argument when
/// there are none to average.
double perplexity(const Completion& completion);
double perplexity(std::span<const double> logprobs);

/// Mean over entity types of the perplexity of the tokens inside each type's
/// JSON value. Falls back to whole-sequence perplexity when no type key can be
/// located in the text.
double entity_perplexity(const Completion& completion, const DatasetSchema& schema);

struct ParsedOutput {
  Annotations annotations;  // every schema type present
  ValidationReport violations;
};

/// Extracts the first JSON array from model output (surrounding prose and
/// code fences are tolerated). Multiple tables are merged per type. Unknown
/// types and attributes are dropped and reported as violations. Throws
/// ParseError when no array is found or it is not a list of objects.
ParsedOutput parse_output(std::string_view text, const DatasetSchema& schema);

std::string prompt_hash(std::string_view prompt);

struct AnnotationOutcome {
  std::optional<Completion> completion;
  std::string error;
};

/// Runs `requests` with at most `max_in_flight` concurrent annotate() calls.
/// Outcomes are returned in request order.
std::vector<AnnotationOutcome> annotate_all(Annotator& annotator, std::span<const AnnotationRequest> requests,
                                            std::size_t max_in_flight);

/// Replays completions recorded in a results log (see ResultsLog). Looks a
/// request up by prompt hash first, then by sample id.
class ReplayAnnotator final : public Annotator {
 public:
  explicit ReplayAnnotator(const std::filesystem::path& path);

  std::string id() const override { return id_; }
  bool supports_logprobs() const override { return true; }
  Completion annotate(const AnnotationRequest& request) override;

 private:
  std::string id_;
  std::map<std::string, Completion> by_hash_;
  std::map<std::string, Completion> by_sample_;
};

}  // namespace allabel
