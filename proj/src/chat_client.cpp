#include "allabel/chat_client.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <thread>

#include "allabel/util.hpp"
#include "httplib.h"
#include "json.hpp"

namespace allabel {

using nlohmann::json;

void AnnotatorConfig::validate() const {
  if (endpoint.empty()) throw std::invalid_argument("annotator endpoint is empty");
  if (max_in_flight < 1) throw std::invalid_argument("max_in_flight must be >= 1");
  if (retry.max_attempts < 1) throw std::invalid_argument("retry attempts must be >= 1");
  if (!(temperature >= 0.0)) throw std::invalid_argument("temperature must be >= 0");
  if (retry.multiplier < 1.0) throw std::invalid_argument("backoff multiplier must be >= 1");
  if (retry.jitter < 0.0 || retry.jitter >= 1.0) throw std::invalid_argument("jitter must lie in [0, 1)");
}

HttpResponse HttplibTransport::post(const HttpRequest& request) {
  const auto scheme_end = request.url.find("://");
  if (scheme_end == std::string::npos) throw AnnotatorError("endpoint needs a scheme: " + request.url);
  const auto path_start = request.url.find('/', scheme_end + 3);
  const std::string origin = request.url.substr(0, path_start);
  const std::string path = path_start == std::string::npos ? "/" : request.url.substr(path_start);

  httplib::Client client(origin);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(request.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(request.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());
  httplib::Headers headers;
  for (const auto& [k, v] : request.headers) headers.emplace(k, v);
  auto res = client.Post(path, headers, request.body, "application/json");
  if (!res) throw TransportError("request to " + origin + " failed: " + httplib::to_string(res.error()));
  return {res->status, res->body};
}

ChatAnnotator::ChatAnnotator(AnnotatorConfig config, std::shared_ptr<HttpTransport> transport, LogSink log,
                             Sleeper sleep)
    : config_(std::move(config)),
      transport_(transport ? std::move(transport) : std::make_shared<HttplibTransport>()),
      log_(log ? std::move(log) : LogSink([](const std::string& line) { std::cerr << line << '\n'; })),
      sleep_(sleep ? std::move(sleep) : Sleeper([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); })) {
  config_.validate();
  if (const char* key = std::getenv(config_.credential_env.c_str()); key && *key) credential_ = key;
  slots_ = std::make_unique<std::counting_semaphore<>>(static_cast<std::ptrdiff_t>(config_.max_in_flight));
}

std::string ChatAnnotator::id() const { return "live:" + config_.model + "@" + config_.endpoint; }

std::string ChatAnnotator::request_body(const std::string& prompt) const {
  json body;
  body["model"] = config_.model;
  body["messages"] = json::array({{{"role", "user"}, {"content", prompt}}});
  body["temperature"] = config_.temperature;
  if (config_.max_tokens) body["max_tokens"] = *config_.max_tokens;
  if (config_.request_logprobs) body["logprobs"] = true;
  return body.dump();
}

Completion ChatAnnotator::parse_response(const std::string& body) {
  try {
    const json j = json::parse(body);
    const auto& choice = j.at("choices").at(0);
    Completion c;
    const auto& content = choice.at("message").at("content");
    c.text = content.is_null() ? std::string() : content.get<std::string>();
    if (choice.contains("logprobs") && choice["logprobs"].is_object() && choice["logprobs"].contains("content") &&
        choice["logprobs"]["content"].is_array()) {
      std::vector<TokenLogprob> lps;
      for (const auto& t : choice["logprobs"]["content"])
        lps.push_back({t.at("token").get<std::string>(), t.at("logprob").get<double>()});
      c.token_logprobs = std::move(lps);
    }
    if (j.contains("usage") && j["usage"].is_object()) {
      c.usage.prompt_tokens = j["usage"].value("prompt_tokens", 0L);
      c.usage.completion_tokens = j["usage"].value("completion_tokens", 0L);
    }
    return c;
  } catch (const json::exception& e) {
    throw AnnotatorError(std::string("malformed chat-completion response: ") + e.what());
  }
}

std::chrono::milliseconds ChatAnnotator::backoff(int attempt) {
  double base = static_cast<double>(config_.retry.initial_backoff.count()) *
                std::pow(config_.retry.multiplier, static_cast<double>(attempt - 1));
  base = std::min(base, static_cast<double>(config_.retry.max_backoff.count()));
  double u;
  {
    std::lock_guard lock(rng_mu_);
    u = unit_interval(rng_());
  }
  const double factor = 1.0 + config_.retry.jitter * (2.0 * u - 1.0);
  return std::chrono::milliseconds(static_cast<long long>(std::llround(base * factor)));
}

std::string ChatAnnotator::redact(std::string text) const {
  if (credential_.empty()) return text;
  for (auto pos = text.find(credential_); pos != std::string::npos; pos = text.find(credential_, pos))
    text.replace(pos, credential_.size(), "***");
  return text;
}

Completion ChatAnnotator::annotate(const AnnotationRequest& request) {
  HttpRequest http;
  http.url = config_.endpoint;
  http.body = request_body(request.prompt);
  http.timeout = config_.timeout;
  if (!credential_.empty()) http.headers.emplace_back("Authorization", "Bearer " + credential_);

  const int attempts = config_.retry.max_attempts;
  std::string last_error;
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    std::string header_log;
    for (const auto& [k, v] : http.headers) header_log += " " + k + ": " + v;
    log_(redact("annotate " + request.sample_id + " attempt " + std::to_string(attempt) + "/" +
                std::to_string(attempts) + " POST " + http.url + header_log + " (" +
                std::to_string(http.body.size()) + " bytes, prompt " + prompt_hash(request.prompt) + ")"));
    bool transient = false;
    try {
      HttpResponse res;
      {
        slots_->acquire();
        struct Release {
          std::counting_semaphore<>& s;
          ~Release() { s.release(); }
        } release{*slots_};
        res = transport_->post(http);
      }
      log_(redact("annotate " + request.sample_id + " attempt " + std::to_string(attempt) + " -> HTTP " +
                  std::to_string(res.status) + " (" + std::to_string(res.body.size()) + " bytes)"));
      if (res.status >= 200 && res.status < 300) return parse_response(res.body);
      if (res.status == 401 || res.status == 403)
        throw AuthError("authentication failed (HTTP " + std::to_string(res.status) + ") for " + config_.endpoint);
      last_error = "HTTP " + std::to_string(res.status) + ": " + redact(res.body.substr(0, 200));
      transient = res.status == 408 || res.status == 429 || res.status >= 500;
      if (!transient) throw AnnotatorError(last_error);
    } catch (const TransportError& e) {
      last_error = e.what();
      transient = true;
      log_(redact("annotate " + request.sample_id + " attempt " + std::to_string(attempt) + " -> " + last_error));
    }
    if (attempt < attempts) sleep_(backoff(attempt));
  }
  throw AnnotatorError("giving up on '" + request.sample_id + "' after " + std::to_string(attempts) +
                       " attempts: " + last_error);
}

}  // namespace allabel
