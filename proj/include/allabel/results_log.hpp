#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "allabel/annotator.hpp"
#include "json.hpp"

namespace allabel {

/// One annotation attempt as persisted in the results log.
struct LogEntry {
  std::string sample_id;
  std::string prompt_hash;
  std::string annotator;
  std::optional<Completion> completion;
  nlohmann::json parsed;  // null when parsing failed or was not attempted
  std::string error;      // empty on success
};

nlohmann::json log_entry_to_json(const LogEntry& e);
LogEntry log_entry_from_json(const nlohmann::json& j);

/// Append-only JSON-lines log. Appends are serialized and flushed line by
/// line, so a killed process leaves at most one truncated trailing line,
/// which read() skips.
class ResultsLog {
 public:
  explicit ResultsLog(const std::filesystem::path& path);

  const std::filesystem::path& path() const { return path_; }
  void append(const LogEntry& entry);
  /// Successful completion previously recorded for (annotator, sample, prompt hash).
  std::optional<Completion> find(const std::string& annotator, const std::string& sample_id,
                                 const std::string& hash) const;
  std::size_t size() const;

  static std::vector<LogEntry> read(const std::filesystem::path& path);
  static std::string key(const std::string& annotator, const std::string& sample_id, const std::string& hash);

 private:
  std::filesystem::path path_;
  mutable std::mutex mu_;
  std::ofstream out_;
  std::map<std::string, Completion> cache_;
  std::size_t lines_ = 0;
};

/// Serves repeated requests from the log (or from memory without one) and
/// records every fresh attempt, failures included. With a schema, the parsed
/// annotations are stored alongside each completion.
class CachedAnnotator final : public Annotator {
 public:
  CachedAnnotator(Annotator& inner, ResultsLog* log, const DatasetSchema* schema = nullptr);

  std::string id() const override { return inner_.id(); }
  bool supports_logprobs() const override { return inner_.supports_logprobs(); }
  Completion annotate(const AnnotationRequest& request) override;

  std::size_t calls() const { return calls_.load(); }
  std::size_t hits() const { return hits_.load(); }

 private:
  Annotator& inner_;
  ResultsLog* log_;
  const DatasetSchema* schema_;
  std::mutex mu_;
  std::map<std::string, Completion> memo_;
  std::atomic<std::size_t> calls_{0};
  std::atomic<std::size_t> hits_{0};
};

}  // namespace allabel
