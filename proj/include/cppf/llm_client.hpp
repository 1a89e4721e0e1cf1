#pragma once

#include <memory>
#include <string>

#include "cppf/replay.hpp"

namespace cppf {

/// A text-completion endpoint. Implementations must be safe to call from
/// several threads at once.
class LlmClient {
 public:
  virtual ~LlmClient() = default;
  // Raw completion text for `prompt`. Transient failures throw RetryableError.
  virtual std::string complete(const std::string& prompt) = 0;
  virtual std::string endpoint() const = 0;
};

/// Serves completions from a replay store. On a miss it either fails with
/// ReplayMissError (strict, no fallback) or forwards to `fallback` and
/// records the answer.
class ReplayClient : public LlmClient {
 public:
  explicit ReplayClient(std::shared_ptr<ReplayStore> store,
                        std::shared_ptr<LlmClient> fallback = nullptr);

  std::string complete(const std::string& prompt) override;
  std::string endpoint() const override;

  const ReplayStore& store() const { return *store_; }

 private:
  std::shared_ptr<ReplayStore> store_;
  std::shared_ptr<LlmClient> fallback_;
};

// Endpoint settings for an OpenAI-style /completions API.
struct EndpointConfig {
  std::string url;  // full completions URL, e.g. https://host/v1/completions
  std::string api_key;
  std::string model;
  int max_tokens = 64;
  double temperature = 0.7;
  int timeout_seconds = 60;

  // Reads <PREFIX>_URL, <PREFIX>_API_KEY, <PREFIX>_MODEL,
  // <PREFIX>_MAX_TOKENS and <PREFIX>_TEMPERATURE. Throws if _URL is unset.
  static EndpointConfig from_env(const std::string& prefix = "CPPF_LLM");
};

class HttpCompletionClient : public LlmClient {
 public:
  explicit HttpCompletionClient(EndpointConfig config);

  std::string complete(const std::string& prompt) override;
  std::string endpoint() const override { return config_.model + "@" + config_.url; }

 private:
  EndpointConfig config_;
  std::string scheme_host_port_;
  std::string path_;
};

// Calls `client.complete`, retrying RetryableError up to `max_attempts` total.
std::string complete_with_retries(LlmClient& client, const std::string& prompt,
                                  int max_attempts = 3);

}  // namespace cppf
