#include "cppf/llm_client.hpp"

#include <chrono>
#include <cstdlib>
#include <thread>

#include "cppf/error.hpp"
#include "httplib.h"
#include "json.hpp"

namespace cppf {

ReplayClient::ReplayClient(std::shared_ptr<ReplayStore> store, std::shared_ptr<LlmClient> fallback)
    : store_(std::move(store)), fallback_(std::move(fallback)) {
  if (!store_) throw ConfigError("replay client needs a store");
}

std::string ReplayClient::complete(const std::string& prompt) {
  const auto digest = prompt_digest(prompt);
  if (auto hit = store_->find_digest(digest)) return hit->completion;
  if (!fallback_) throw ReplayMissError(digest);
  auto completion = fallback_->complete(prompt);
  store_->insert({digest, prompt, completion, fallback_->endpoint()});
  return completion;
}

std::string ReplayClient::endpoint() const {
  return fallback_ ? "replay+" + fallback_->endpoint() : "replay";
}

EndpointConfig EndpointConfig::from_env(const std::string& prefix) {
  auto get = [&](const char* suffix) -> std::string {
    const char* v = std::getenv((prefix + suffix).c_str());
    return v ? std::string(v) : std::string();
  };
  EndpointConfig c;
  c.url = get("_URL");
  if (c.url.empty()) throw ConfigError(prefix + "_URL is not set");
  c.api_key = get("_API_KEY");
  c.model = get("_MODEL");
  if (auto v = get("_MAX_TOKENS"); !v.empty()) c.max_tokens = std::stoi(v);
  if (auto v = get("_TEMPERATURE"); !v.empty()) c.temperature = std::stod(v);
  return c;
}

HttpCompletionClient::HttpCompletionClient(EndpointConfig config) : config_(std::move(config)) {
  const auto scheme_end = config_.url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("endpoint URL needs a scheme: " + config_.url);
  const auto path_start = config_.url.find('/', scheme_end + 3);
  scheme_host_port_ = config_.url.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : config_.url.substr(path_start);
}

std::string HttpCompletionClient::complete(const std::string& prompt) {
  httplib::Client cli(scheme_host_port_);
  cli.set_connection_timeout(config_.timeout_seconds, 0);
  cli.set_read_timeout(config_.timeout_seconds, 0);
  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

  nlohmann::json body = {{"prompt", prompt},
                         {"max_tokens", config_.max_tokens},
                         {"temperature", config_.temperature}};
  if (!config_.model.empty()) body["model"] = config_.model;

  auto res = cli.Post(path_, headers, body.dump(), "application/json");
  if (!res) {
    throw RetryableError("request to " + config_.url + " failed: " + httplib::to_string(res.error()));
  }
  if (res->status == 429 || res->status >= 500) {
    throw RetryableError("endpoint returned HTTP " + std::to_string(res->status));
  }
  if (res->status != 200) {
    throw Error("endpoint returned HTTP " + std::to_string(res->status) + ": " + res->body);
  }
  try {
    auto j = nlohmann::json::parse(res->body);
    return j.at("choices").at(0).at("text").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("unexpected completion payload: ") + e.what());
  }
}

std::string complete_with_retries(LlmClient& client, const std::string& prompt, int max_attempts) {
  if (max_attempts < 1) max_attempts = 1;
  for (int attempt = 1;; ++attempt) {
    try {
      return client.complete(prompt);
    } catch (const RetryableError&) {
      if (attempt >= max_attempts) throw;
      std::this_thread::sleep_for(std::chrono::milliseconds(100 << (attempt - 1)));
    }
  }
}

}  // namespace cppf
