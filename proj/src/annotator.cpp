#include "allabel/annotator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "allabel/error.hpp"
#include "allabel/results_log.hpp"
#include "allabel/util.hpp"

namespace allabel {

using nlohmann::json;

json completion_to_json(const Completion& c) {
  json j;
  j["text"] = c.text;
  if (c.token_logprobs) {
    json lp = json::array();
    for (const auto& t : *c.token_logprobs) lp.push_back(json::array({t.token, t.logprob}));
    j["token_logprobs"] = std::move(lp);
  } else {
    j["token_logprobs"] = nullptr;
  }
  j["usage"] = {{"prompt_tokens", c.usage.prompt_tokens}, {"completion_tokens", c.usage.completion_tokens}};
  return j;
}

Completion completion_from_json(const json& j) {
  Completion c;
  c.text = j.at("text").get<std::string>();
  if (j.contains("token_logprobs") && !j["token_logprobs"].is_null()) {
    std::vector<TokenLogprob> lp;
    for (const auto& t : j["token_logprobs"]) lp.push_back({t.at(0).get<std::string>(), t.at(1).get<double>()});
    c.token_logprobs = std::move(lp);
  }
  if (j.contains("usage")) {
    c.usage.prompt_tokens = j["usage"].value("prompt_tokens", 0L);
    c.usage.completion_tokens = j["usage"].value("completion_tokens", 0L);
  }
  return c;
}

double perplexity(std::span<const double> logprobs) {
  if (logprobs.empty()) throw std::invalid_argument("perplexity of an empty token sequence");
  double sum = 0.0;
  for (double lp : logprobs) sum += lp;
  return std::exp(-sum / static_cast<double>(logprobs.size()));
}

double perplexity(const Completion& completion) {
  if (!completion.token_logprobs) throw CapabilityError("completion carries no token log-probabilities");
  std::vector<double> lps;
  lps.reserve(completion.token_logprobs->size());
  for (const auto& t : *completion.token_logprobs) lps.push_back(t.logprob);
  return perplexity(lps);
}

double entity_perplexity(const Completion& completion, const DatasetSchema& schema) {
  if (!completion.token_logprobs) throw CapabilityError("completion carries no token log-probabilities");
  const auto& tokens = *completion.token_logprobs;
  std::string joined;
  std::vector<std::size_t> starts;
  starts.reserve(tokens.size());
  for (const auto& t : tokens) {
    starts.push_back(joined.size());
    joined += t.token;
  }
  if (joined != completion.text) return perplexity(completion);

  // Positions of `"Type"` followed by a colon.
  std::vector<std::pair<std::size_t, std::size_t>> keys;  // (offset, type index)
  const auto& types = schema.entity_types();
  for (std::size_t ti = 0; ti < types.size(); ++ti) {
    const std::string needle = "\"" + types[ti].name + "\"";
    for (auto pos = joined.find(needle); pos != std::string::npos; pos = joined.find(needle, pos + 1)) {
      auto after = joined.find_first_not_of(" \t\r\n", pos + needle.size());
      if (after != std::string::npos && joined[after] == ':') keys.emplace_back(pos, ti);
    }
  }
  if (keys.empty()) return perplexity(completion);
  std::sort(keys.begin(), keys.end());

  std::vector<std::vector<double>> per_type(types.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    while (k + 1 < keys.size() && keys[k + 1].first <= starts[i]) ++k;
    if (starts[i] < keys[k].first) continue;
    per_type[keys[k].second].push_back(tokens[i].logprob);
  }
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& lps : per_type) {
    if (lps.empty()) continue;
    sum += perplexity(lps);
    ++n;
  }
  return n ? sum / static_cast<double>(n) : perplexity(completion);
}

namespace {

// End (exclusive) of the balanced JSON value starting at `start`, or npos.
std::size_t balanced_end(std::string_view text, std::size_t start) {
  std::vector<char> stack;
  bool in_string = false, escaped = false;
  for (std::size_t i = start; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (escaped)
        escaped = false;
      else if (c == '\\')
        escaped = true;
      else if (c == '"')
        in_string = false;
      continue;
    }
    switch (c) {
      case '"': in_string = true; break;
      case '[': stack.push_back(']'); break;
      case '{': stack.push_back('}'); break;
      case ']':
      case '}':
        if (stack.empty() || stack.back() != c) return std::string_view::npos;
        stack.pop_back();
        if (stack.empty()) return i + 1;
        break;
      default: break;
    }
  }
  return std::string_view::npos;
}

std::string scalar_to_string(const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

}  // namespace

ParsedOutput parse_output(std::string_view text, const DatasetSchema& schema) {
  json value;
  bool found = false;
  for (std::size_t pos = text.find_first_of("[{"); pos != std::string_view::npos;
       pos = text.find_first_of("[{", pos + 1)) {
    const std::size_t end = balanced_end(text, pos);
    if (end == std::string_view::npos) continue;
    try {
      value = json::parse(text.substr(pos, end - pos));
    } catch (const json::parse_error&) {
      continue;
    }
    found = true;
    break;
  }
  if (!found) throw ParseError("<output>", "no JSON found");
  if (value.is_object()) value = json::array({value});
  if (!value.is_array()) throw ParseError("<output>", "expected a JSON list of tables");
  for (const auto& table : value)
    if (!table.is_object()) throw ParseError("<output>", "expected a JSON list of objects");

  ParsedOutput out;
  for (const auto& table : value) {
    for (const auto& [type, records] : table.items()) {
      const EntityType* et = schema.find(type);
      if (!et) {
        out.violations.push_back({"", "unknown entity type '" + type + "'"});
        continue;
      }
      auto& list = out.annotations[type];
      json items = records;
      if (items.is_object()) {
        out.violations.push_back({"", "'" + type + "' holds an object instead of a list"});
        items = json::array({items});
      } else if (items.is_null()) {
        continue;
      } else if (!items.is_array()) {
        out.violations.push_back({"", "'" + type + "' is not a list"});
        continue;
      }
      for (const auto& r : items) {
        if (!r.is_object()) {
          out.violations.push_back({"", "record of '" + type + "' is not an object"});
          continue;
        }
        EntityRecord rec;
        for (const auto& [attr, v] : r.items()) {
          if (std::find(et->attributes.begin(), et->attributes.end(), attr) == et->attributes.end()) {
            out.violations.push_back({"", "unknown attribute '" + attr + "' in '" + type + "'"});
            continue;
          }
          if (v.is_null()) continue;
          if (v.is_structured()) {
            out.violations.push_back({"", "attribute '" + attr + "' of '" + type + "' is not a scalar"});
            continue;
          }
          if (!v.is_string()) out.violations.push_back({"", "attribute '" + attr + "' of '" + type + "' is not a string"});
          rec[attr] = scalar_to_string(v);
        }
        if (!rec.empty()) list.push_back(std::move(rec));
      }
    }
  }
  out.annotations = complete_annotations(std::move(out.annotations), schema);
  return out;
}

std::string prompt_hash(std::string_view prompt) { return hex64(fnv1a64(prompt)); }

std::vector<AnnotationOutcome> annotate_all(Annotator& annotator, std::span<const AnnotationRequest> requests,
                                            std::size_t max_in_flight) {
  if (max_in_flight == 0) throw std::invalid_argument("max_in_flight must be at least 1");
  std::vector<AnnotationOutcome> outcomes(requests.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < requests.size(); i = next++) {
      try {
        outcomes[i].completion = annotator.annotate(requests[i]);
      } catch (const std::exception& e) {
        outcomes[i].error = e.what();
      }
    }
  };
  const std::size_t threads = std::min(max_in_flight, requests.size());
  if (threads <= 1) {
    worker();
    return outcomes;
  }
  {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  return outcomes;
}

ReplayAnnotator::ReplayAnnotator(const std::filesystem::path& path) : id_("replay:" + path.filename().string()) {
  if (!std::filesystem::exists(path)) throw IoError("replay file not found: " + path.string());
  for (auto& e : ResultsLog::read(path)) {
    if (!e.completion || !e.error.empty()) continue;
    if (!e.prompt_hash.empty()) by_hash_.insert_or_assign(e.prompt_hash, *e.completion);
    by_sample_.insert_or_assign(e.sample_id, *e.completion);
  }
}

Completion ReplayAnnotator::annotate(const AnnotationRequest& request) {
  if (auto it = by_hash_.find(prompt_hash(request.prompt)); it != by_hash_.end()) return it->second;
  if (auto it = by_sample_.find(request.sample_id); it != by_sample_.end()) return it->second;
  throw AnnotatorError("no recorded completion for sample '" + request.sample_id + "'");
}

}  // namespace allabel
