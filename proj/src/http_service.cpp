#include "rewardkit/http_service.hpp"

#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "rewardkit/errors.hpp"

namespace rewardkit {

using json = nlohmann::json;

namespace {

// RAII slot on a counting semaphore.
class SlotGuard {
 public:
  explicit SlotGuard(std::counting_semaphore<>& sem) : sem_(sem) { sem_.acquire(); }
  ~SlotGuard() { sem_.release(); }
  SlotGuard(const SlotGuard&) = delete;
  SlotGuard& operator=(const SlotGuard&) = delete;

 private:
  std::counting_semaphore<>& sem_;
};

std::unique_ptr<std::counting_semaphore<>> make_slots(std::size_t n) {
  return std::make_unique<std::counting_semaphore<>>(static_cast<std::ptrdiff_t>(n));
}

std::string post_json(const Endpoint& endpoint, const std::string& token,
                      std::chrono::milliseconds timeout, const json& body) {
  httplib::Client client(endpoint.origin);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  httplib::Headers headers;
  if (!token.empty()) headers.emplace("Authorization", "Bearer " + token);
  auto res = client.Post(endpoint.path, headers, body.dump(), "application/json");
  if (!res) {
    throw TransportError("request to " + endpoint.origin + endpoint.path +
                             " failed: " + httplib::to_string(res.error()),
                         true);
  }
  if (res->status < 200 || res->status >= 300) {
    const bool retryable = res->status == 429 || res->status >= 500;
    throw TransportError("HTTP " + std::to_string(res->status) + " from " + endpoint.origin +
                             endpoint.path + ": " + res->body,
                         retryable);
  }
  return res->body;
}

json parse_body(const std::string& body, const std::string& what) {
  try {
    return json::parse(body);
  } catch (const json::exception& e) {
    throw ScoringError(what + " response is not valid JSON: " + e.what());
  }
}

}  // namespace

Endpoint parse_endpoint(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw ConfigError("endpoint '" + url + "' must start with http:// or https://");
  }
  const std::string scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw ConfigError("endpoint '" + url + "' has unsupported scheme '" + scheme + "'");
  }
  const auto path_begin = url.find('/', scheme_end + 3);
  Endpoint ep;
  ep.origin = url.substr(0, path_begin);
  ep.path = path_begin == std::string::npos ? "/" : url.substr(path_begin);
  if (ep.origin.size() <= scheme_end + 3) throw ConfigError("endpoint '" + url + "' has no host");
  return ep;
}

std::string bearer_token_from_env(const std::string& env_name) {
  if (env_name.empty()) return {};
  const char* value = std::getenv(env_name.c_str());
  return value ? std::string(value) : std::string();
}

std::string with_retries(const RetryPolicy& policy, const std::function<std::string()>& attempt,
                         const std::function<void(std::chrono::milliseconds)>& sleep) {
  auto backoff = policy.initial_backoff;
  const int attempts = policy.max_retries + 1;
  for (int i = 1;; ++i) {
    try {
      return attempt();
    } catch (const TransportError& e) {
      if (!e.retryable() || i >= attempts) {
        throw ScoringError(std::string(e.what()) + " (after " + std::to_string(i) + " attempt" +
                           (i == 1 ? "" : "s") + ")");
      }
    }
    if (sleep) {
      sleep(backoff);
    } else {
      std::this_thread::sleep_for(backoff);
    }
    backoff *= 2;
  }
}

HttpChatService::HttpChatService(const JudgeConfig& cfg)
    : endpoint_(parse_endpoint(cfg.endpoint)),
      token_(bearer_token_from_env(cfg.api_key_env)),
      timeout_(cfg.timeout),
      retry_(cfg.retry),
      slots_(make_slots(cfg.parallelism)) {}

std::string HttpChatService::complete(const ChatRequest& request) {
  const json body = {{"model", request.model},
                     {"messages", json::array({{{"role", "user"}, {"content", request.prompt}}})},
                     {"temperature", request.temperature},
                     {"max_tokens", request.max_tokens}};
  const std::string raw = with_retries(retry_, [&] {
    SlotGuard slot(*slots_);
    return post_json(endpoint_, token_, timeout_, body);
  });
  const json reply = parse_body(raw, "chat completion");
  try {
    return reply.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw ScoringError("chat completion response lacks choices[0].message.content: " +
                       std::string(e.what()));
  }
}

HttpEmbeddingService::HttpEmbeddingService(const EmbeddingConfig& cfg)
    : endpoint_(parse_endpoint(cfg.endpoint)),
      token_(bearer_token_from_env(cfg.api_key_env)),
      timeout_(cfg.timeout),
      retry_(cfg.retry),
      slots_(make_slots(cfg.parallelism)) {}

std::vector<EmbeddingVector> HttpEmbeddingService::embed(const std::string& model,
                                                         const std::vector<std::string>& texts) {
  const json body = {{"model", model}, {"input", texts}};
  const std::string raw = with_retries(retry_, [&] {
    SlotGuard slot(*slots_);
    return post_json(endpoint_, token_, timeout_, body);
  });
  const json reply = parse_body(raw, "embedding");
  std::vector<EmbeddingVector> out;
  try {
    const auto& data = reply.at("data");
    out.resize(texts.size());
    if (data.size() != texts.size()) {
      throw ScoringError("embedding response has " + std::to_string(data.size()) +
                         " vectors for " + std::to_string(texts.size()) + " inputs");
    }
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto& item = data.at(i);
      const std::size_t index = item.contains("index") ? item.at("index").get<std::size_t>() : i;
      if (index >= out.size()) throw ScoringError("embedding response index out of range");
      out[index] = item.at("embedding").get<EmbeddingVector>();
    }
  } catch (const json::exception& e) {
    throw ScoringError("embedding response lacks data[i].embedding: " + std::string(e.what()));
  }
  return out;
}

}  // namespace rewardkit
