#pragma once

#include <atomic>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "rewardkit/model_rewards.hpp"

namespace httplib {
class Server;
}

namespace rewardkit {

// Scripted responses for the mock judge/embedding service. File format:
//
//   {
//     "chat":       {"<substring of request content>": "<reply>", ...},
//     "chat_default": "<reply>",                    (optional)
//     "embeddings": {"<substring of input text>": [floats], ...},
//     "embedding_default": [floats],                (optional)
//     "fail_first": 0                               (optional; 503 for the first N requests)
//   }
//
// Among matching keys the longest wins, so lookups do not depend on key order.
struct MockTable {
  std::vector<std::pair<std::string, std::string>> chat;
  std::optional<std::string> chat_default;
  std::vector<std::pair<std::string, EmbeddingVector>> embeddings;
  std::optional<EmbeddingVector> embedding_default;
  int fail_first = 0;

  static MockTable from_json_text(std::string_view text);
  static MockTable load(const std::filesystem::path& path);

  std::optional<std::string> chat_reply(std::string_view content) const;
  std::optional<EmbeddingVector> embedding_for(std::string_view text) const;
};

// In-process server speaking the chat-completions and embeddings protocols.
class MockServer {
 public:
  explicit MockServer(MockTable table);
  ~MockServer();
  MockServer(const MockServer&) = delete;
  MockServer& operator=(const MockServer&) = delete;

  // Binds (port 0 picks a free port) and serves on a background thread.
  int start(const std::string& host = "127.0.0.1", int port = 0);
  // Serves on the calling thread until stop() is called from elsewhere.
  bool listen(const std::string& host, int port);
  void stop();

  int port() const noexcept { return port_; }
  std::string base_url() const;
  std::size_t chat_requests() const noexcept { return chat_requests_; }
  std::size_t embedding_requests() const noexcept { return embedding_requests_; }

 private:
  void install_routes();
  bool should_fail();

  MockTable table_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  std::string host_ = "127.0.0.1";
  int port_ = 0;
  std::atomic<std::size_t> chat_requests_{0};
  std::atomic<std::size_t> embedding_requests_{0};
  std::atomic<int> failures_left_{0};
};

}  // namespace rewardkit
