#pragma once

// HTTP client for an external image-text scoring service.
//
//   POST /score  {"image_b64": "<base64>", "prompt": "<text>"}
//   200          {"score": <number>}
//
// Connection failures, timeouts, 429 and 5xx are retried with exponential
// backoff. The whole call, retries and sleeps included, never exceeds
// timeout * (max_retries + 1).

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "httplib.h"
#include "json.hpp"
#include "vlfm/scorer.hpp"

namespace vlfm {

/// Failure to obtain a score from the service; carries endpoint and cause.
class ScorerTransportError : public ScorerError {
 public:
  ScorerTransportError(std::string endpoint, std::string cause, bool retryable)
      : ScorerError("scorer endpoint " + endpoint + ": " + cause),
        endpoint_(std::move(endpoint)),
        cause_(std::move(cause)),
        retryable_(retryable) {}
  const std::string& endpoint() const { return endpoint_; }
  const std::string& cause() const { return cause_; }
  bool retryable() const { return retryable_; }

 private:
  std::string endpoint_;
  std::string cause_;
  bool retryable_;
};

struct RemoteScorerConfig {
  std::string endpoint = "http://127.0.0.1:8080";
  std::chrono::milliseconds timeout{2000};
  int max_retries = 2;
  std::chrono::milliseconds backoff_initial{50};
  double backoff_multiplier = 2.0;
  std::chrono::milliseconds backoff_max{1000};

  std::chrono::milliseconds total_budget() const { return timeout * (max_retries + 1); }

  /// VLFM_SCORER_ENDPOINT and VLFM_SCORER_TIMEOUT_MS override the fields.
  void apply_env_overrides() {
    if (const char* e = std::getenv("VLFM_SCORER_ENDPOINT"); e != nullptr && *e != '\0') endpoint = e;
    if (const char* t = std::getenv("VLFM_SCORER_TIMEOUT_MS"); t != nullptr && *t != '\0') {
      timeout = std::chrono::milliseconds(std::stoll(t));
    }
  }
};

inline std::string base64_encode(std::span<const std::uint8_t> bytes) {
  static constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const std::uint32_t n = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    out += kAlphabet[(n >> 18) & 63];
    out += kAlphabet[(n >> 12) & 63];
    out += kAlphabet[(n >> 6) & 63];
    out += kAlphabet[n & 63];
  }
  if (i + 1 == bytes.size()) {
    const std::uint32_t n = bytes[i] << 16;
    out += kAlphabet[(n >> 18) & 63];
    out += kAlphabet[(n >> 12) & 63];
    out += "==";
  } else if (i + 2 == bytes.size()) {
    const std::uint32_t n = (bytes[i] << 16) | (bytes[i + 1] << 8);
    out += kAlphabet[(n >> 18) & 63];
    out += kAlphabet[(n >> 12) & 63];
    out += kAlphabet[(n >> 6) & 63];
    out += '=';
  }
  return out;
}

inline std::string make_score_request(std::span<const std::uint8_t> image, const Prompt& prompt) {
  nlohmann::json body;
  body["image_b64"] = base64_encode(image);
  body["prompt"] = prompt.text;
  return body.dump();
}

/// Parses a 200 response body. Throws on a missing or non-numeric score.
inline double parse_score_response(std::string_view body) {
  const auto j = nlohmann::json::parse(body, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object()) throw std::invalid_argument("response is not a JSON object");
  const auto it = j.find("score");
  if (it == j.end() || !it->is_number()) throw std::invalid_argument("response lacks a numeric \"score\"");
  const double s = it->get<double>();
  if (!std::isfinite(s)) throw std::invalid_argument("score is not finite");
  return std::clamp(s, 0.0, 1.0);
}

class RemoteScorer final : public SemanticScorer {
 public:
  explicit RemoteScorer(RemoteScorerConfig config) : config_(std::move(config)) {}

  const RemoteScorerConfig& config() const { return config_; }
  std::string name() const override { return "remote"; }
  bool needs_image() const override { return true; }

  double score(const ScorerObservation& obs, const Prompt& prompt) const override {
    if (!obs.image) throw ScorerError("remote scorer needs image bytes");
    const std::string body = make_score_request(*obs.image, prompt);

    using Clock = std::chrono::steady_clock;
    const auto deadline = Clock::now() + config_.total_budget();
    auto backoff = config_.backoff_initial;
    std::string last_cause = "no attempt made";
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
      const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
      if (remaining.count() <= 0) break;
      try {
        return attempt_once(body, std::min(config_.timeout, remaining));
      } catch (const ScorerTransportError& e) {
        last_cause = e.cause();
        if (!e.retryable()) throw;
      }
      if (attempt == config_.max_retries) break;
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
      if (left <= backoff) break;
      std::this_thread::sleep_for(backoff);
      backoff = std::min(config_.backoff_max, std::chrono::milliseconds(static_cast<long long>(
                                                  static_cast<double>(backoff.count()) * config_.backoff_multiplier)));
    }
    throw ScorerTransportError(config_.endpoint, last_cause + " (retries exhausted)", false);
  }

  /// True if the endpoint accepts connections and answers HTTP at all.
  bool probe() const {
    auto client = make_client(config_.timeout);
    const auto res = client->Post("/score", "{}", "application/json");
    return static_cast<bool>(res);
  }

 private:
  std::unique_ptr<httplib::Client> make_client(std::chrono::milliseconds budget) const {
    auto client = std::make_unique<httplib::Client>(config_.endpoint);
    // Phases share one attempt budget: connect and write a quarter each, read half.
    const auto quarter = std::max<std::chrono::milliseconds::rep>(1, budget.count() / 4);
    const auto half = std::max<std::chrono::milliseconds::rep>(1, budget.count() / 2);
    client->set_connection_timeout(std::chrono::milliseconds(quarter));
    client->set_write_timeout(std::chrono::milliseconds(quarter));
    client->set_read_timeout(std::chrono::milliseconds(half));
    client->set_keep_alive(false);
    return client;
  }

  double attempt_once(const std::string& body, std::chrono::milliseconds budget) const {
    auto client = make_client(budget);
    if (!client->is_valid()) throw ScorerTransportError(config_.endpoint, "invalid endpoint", false);
    const auto res = client->Post("/score", body, "application/json");
    if (!res) {
      throw ScorerTransportError(config_.endpoint, "transport failure: " + httplib::to_string(res.error()), true);
    }
    if (res->status != 200) {
      const bool retryable = res->status == 429 || res->status >= 500;
      throw ScorerTransportError(config_.endpoint, "HTTP status " + std::to_string(res->status), retryable);
    }
    try {
      return parse_score_response(res->body);
    } catch (const std::exception& e) {
      throw ScorerTransportError(config_.endpoint, std::string("malformed response: ") + e.what(), false);
    }
  }

  RemoteScorerConfig config_;
};

}  // namespace vlfm
