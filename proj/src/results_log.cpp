#include "allabel/results_log.hpp"

#include "allabel/error.hpp"

namespace allabel {

nlohmann::json log_entry_to_json(const LogEntry& e) {
  nlohmann::json j;
  j["sample_id"] = e.sample_id;
  j["prompt_hash"] = e.prompt_hash;
  j["annotator"] = e.annotator;
  j["completion"] = e.completion ? completion_to_json(*e.completion) : nlohmann::json(nullptr);
  j["parsed"] = e.parsed;
  if (!e.error.empty()) j["error"] = e.error;
  return j;
}

LogEntry log_entry_from_json(const nlohmann::json& j) {
  LogEntry e;
  e.sample_id = j.at("sample_id").get<std::string>();
  e.prompt_hash = j.value("prompt_hash", "");
  e.annotator = j.value("annotator", "");
  if (j.contains("completion") && !j["completion"].is_null()) e.completion = completion_from_json(j["completion"]);
  if (j.contains("parsed")) e.parsed = j["parsed"];
  if (j.contains("error") && j["error"].is_string()) e.error = j["error"].get<std::string>();
  return e;
}

std::vector<LogEntry> ResultsLog::read(const std::filesystem::path& path) {
  std::vector<LogEntry> out;
  std::ifstream in(path, std::ios::binary);
  if (!in) return out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      out.push_back(log_entry_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception&) {
      // truncated by an interrupted writer
    }
  }
  return out;
}

ResultsLog::ResultsLog(const std::filesystem::path& path) : path_(path) {
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  bool needs_newline = false;
  if (std::filesystem::exists(path_)) {
    for (auto& e : read(path_)) {
      ++lines_;
      if (e.completion && e.error.empty()) cache_.emplace(key(e.annotator, e.sample_id, e.prompt_hash), std::move(*e.completion));
    }
    std::ifstream tail(path_, std::ios::binary | std::ios::ate);
    if (tail && tail.tellg() > 0) {
      tail.seekg(-1, std::ios::end);
      needs_newline = tail.get() != '\n';
    }
  }
  out_.open(path_, std::ios::binary | std::ios::app);
  if (!out_) throw IoError("cannot open results log " + path_.string());
  // Terminate a line cut short by a killed writer so the next entry parses.
  if (needs_newline) out_ << '\n' << std::flush;
}

void ResultsLog::append(const LogEntry& entry) {
  const std::string line = log_entry_to_json(entry).dump() + "\n";
  std::lock_guard lock(mu_);
  out_ << line << std::flush;
  if (!out_) throw IoError("cannot append to results log " + path_.string());
  ++lines_;
  if (entry.completion && entry.error.empty()) cache_.insert_or_assign(key(entry.annotator, entry.sample_id, entry.prompt_hash), *entry.completion);
}

std::string ResultsLog::key(const std::string& annotator, const std::string& sample_id, const std::string& hash) {
  return annotator + '\n' + sample_id + '\n' + hash;
}

std::optional<Completion> ResultsLog::find(const std::string& annotator, const std::string& sample_id,
                                           const std::string& hash) const {
  std::lock_guard lock(mu_);
  auto it = cache_.find(key(annotator, sample_id, hash));
  if (it == cache_.end()) return std::nullopt;
  return it->second;
}

std::size_t ResultsLog::size() const {
  std::lock_guard lock(mu_);
  return lines_;
}


CachedAnnotator::CachedAnnotator(Annotator& inner, ResultsLog* log, const DatasetSchema* schema)
    : inner_(inner), log_(log), schema_(schema) {}

Completion CachedAnnotator::annotate(const AnnotationRequest& request) {
  const std::string hash = prompt_hash(request.prompt);
  const std::string annotator = inner_.id();
  if (log_) {
    if (auto hit = log_->find(annotator, request.sample_id, hash)) {
      hits_.fetch_add(1);
      return *hit;
    }
  } else {
    std::lock_guard lock(mu_);
    auto it = memo_.find(ResultsLog::key(annotator, request.sample_id, hash));
    if (it != memo_.end()) {
      hits_.fetch_add(1);
      return it->second;
    }
  }
  calls_.fetch_add(1);
  LogEntry entry{request.sample_id, hash, annotator, std::nullopt, nullptr, {}};
  try {
    entry.completion = inner_.annotate(request);
  } catch (const std::exception& e) {
    entry.error = e.what();
    if (log_) log_->append(entry);
    throw;
  }
  if (schema_) {
    try {
      entry.parsed = annotations_to_json(parse_output(entry.completion->text, *schema_).annotations, *schema_);
    } catch (const ParseError&) {
    }
  }
  if (log_) {
    log_->append(entry);
  } else {
    std::lock_guard lock(mu_);
    memo_.insert_or_assign(ResultsLog::key(annotator, request.sample_id, hash), *entry.completion);
  }
  return *entry.completion;
}

}  // namespace allabel
