#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <semaphore>
#include <string>
#include <vector>

#include "rewardkit/model_rewards.hpp"

namespace rewardkit {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;    // begins with '/'
};

// Splits "http://host:port/v1/chat/completions". Throws ConfigError.
Endpoint parse_endpoint(const std::string& url);

// Reads the bearer token from the named environment variable; empty name or
// unset variable yields an empty token.
std::string bearer_token_from_env(const std::string& env_name);

// Thrown by a single attempt; `retryable` marks transport failures, 429 and 5xx.
class TransportError : public std::runtime_error {
 public:
  TransportError(const std::string& what, bool retryable)
      : std::runtime_error(what), retryable_(retryable) {}
  bool retryable() const noexcept { return retryable_; }

 private:
  bool retryable_;
};

// Runs `attempt` up to max_retries + 1 times, doubling the backoff after each
// retryable failure. The final failure is rethrown as ScoringError.
std::string with_retries(const RetryPolicy& policy, const std::function<std::string()>& attempt,
                         const std::function<void(std::chrono::milliseconds)>& sleep = {});

// Chat-completions client: POST {"model","messages":[{"role":"user","content"}],
// "temperature","max_tokens"}; reply read from choices[0].message.content.
class HttpChatService final : public ChatService {
 public:
  explicit HttpChatService(const JudgeConfig& cfg);
  std::string complete(const ChatRequest& request) override;

 private:
  Endpoint endpoint_;
  std::string token_;
  std::chrono::milliseconds timeout_;
  RetryPolicy retry_;
  std::unique_ptr<std::counting_semaphore<>> slots_;
};

// Embeddings client: POST {"model","input":[...]}; vectors from data[i].embedding.
class HttpEmbeddingService final : public EmbeddingService {
 public:
  explicit HttpEmbeddingService(const EmbeddingConfig& cfg);
  std::vector<EmbeddingVector> embed(const std::string& model,
                                     const std::vector<std::string>& texts) override;

 private:
  Endpoint endpoint_;
  std::string token_;
  std::chrono::milliseconds timeout_;
  RetryPolicy retry_;
  std::unique_ptr<std::counting_semaphore<>> slots_;
};

}  // namespace rewardkit
