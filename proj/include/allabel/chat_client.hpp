#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <semaphore>
#include <string>
#include <utility>
#include <vector>

#include "allabel/annotator.hpp"
#include "allabel/error.hpp"

namespace allabel {

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{500};
  double multiplier = 2.0;
  std::chrono::milliseconds max_backoff{30000};
  double jitter = 0.2;  // +/- fraction applied to each backoff
};

struct AnnotatorConfig {
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  std::string model = "gpt-4o";
  double temperature = 0.0;
  std::optional<int> max_tokens;
  std::size_t max_in_flight = 4;
  RetryPolicy retry;
  std::chrono::milliseconds timeout{120000};
  std::string credential_env = "ALLABEL_API_KEY";
  bool request_logprobs = true;

  /// Throws std::invalid_argument on out-of-range fields.
  void validate() const;
};

struct HttpRequest {
  std::string url;
  std::vector<std::pair<std::string, std::string>> headers;
  std::string body;
  std::chrono::milliseconds timeout{0};
};

struct HttpResponse {
  int status = 0;
  std::string body;
};

/// Connection failure or timeout; retried like a 5xx.
class TransportError : public AnnotatorError {
 public:
  using AnnotatorError::AnnotatorError;
};

class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  /// Must be safe to call concurrently. Throws TransportError when no HTTP
  /// response was received.
  virtual HttpResponse post(const HttpRequest& request) = 0;
};

/// cpp-httplib backed transport (http and https).
class HttplibTransport final : public HttpTransport {
 public:
  HttpResponse post(const HttpRequest& request) override;
};

using LogSink = std::function<void(const std::string&)>;
using Sleeper = std::function<void(std::chrono::milliseconds)>;

/// Chat-completion client speaking the common `messages` wire format.
/// At most config.max_in_flight requests are outstanding at any time, no
/// matter how many threads call annotate().
class ChatAnnotator final : public Annotator {
 public:
  explicit ChatAnnotator(AnnotatorConfig config, std::shared_ptr<HttpTransport> transport = nullptr,
                         LogSink log = nullptr, Sleeper sleep = nullptr);

  std::string id() const override;
  bool supports_logprobs() const override { return config_.request_logprobs; }
  Completion annotate(const AnnotationRequest& request) override;

  std::string request_body(const std::string& prompt) const;
  /// Throws AnnotatorError on a malformed body.
  static Completion parse_response(const std::string& body);

  /// Backoff before attempt `attempt + 1` (1-based), jitter included.
  std::chrono::milliseconds backoff(int attempt);

 private:
  std::string redact(std::string text) const;

  AnnotatorConfig config_;
  std::shared_ptr<HttpTransport> transport_;
  LogSink log_;
  Sleeper sleep_;
  std::string credential_;
  std::unique_ptr<std::counting_semaphore<>> slots_;
  std::mutex rng_mu_;
  std::mt19937_64 rng_{0x5eed};
};

}  // namespace allabel
