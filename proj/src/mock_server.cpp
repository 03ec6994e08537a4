#include "rewardkit/mock_server.hpp"

#include <fstream>
#include <sstream>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "rewardkit/errors.hpp"

namespace rewardkit {

using json = nlohmann::json;

namespace {

template <typename V>
const std::pair<std::string, V>* longest_match(const std::vector<std::pair<std::string, V>>& entries,
                                               std::string_view text) {
  const std::pair<std::string, V>* best = nullptr;
  for (const auto& entry : entries) {
    if (text.find(entry.first) == std::string_view::npos) continue;
    if (!best || entry.first.size() > best->first.size() ||
        (entry.first.size() == best->first.size() && entry.first < best->first)) {
      best = &entry;
    }
  }
  return best;
}

void reply_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

json error_body(const std::string& message) { return {{"error", {{"message", message}}}}; }

}  // namespace

MockTable MockTable::from_json_text(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("mock table is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ValidationError("mock table must be a JSON object");
  MockTable table;
  try {
    if (doc.contains("chat")) {
      for (const auto& [key, value] : doc.at("chat").items()) {
        table.chat.emplace_back(key, value.get<std::string>());
      }
    }
    if (doc.contains("chat_default")) table.chat_default = doc.at("chat_default").get<std::string>();
    if (doc.contains("embeddings")) {
      for (const auto& [key, value] : doc.at("embeddings").items()) {
        table.embeddings.emplace_back(key, value.get<EmbeddingVector>());
      }
    }
    if (doc.contains("embedding_default")) {
      table.embedding_default = doc.at("embedding_default").get<EmbeddingVector>();
    }
    if (doc.contains("fail_first")) table.fail_first = doc.at("fail_first").get<int>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed mock table: ") + e.what());
  }
  return table;
}

MockTable MockTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open mock table " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return from_json_text(buffer.str());
}

std::optional<std::string> MockTable::chat_reply(std::string_view content) const {
  if (const auto* hit = longest_match(chat, content)) return hit->second;
  return chat_default;
}

std::optional<EmbeddingVector> MockTable::embedding_for(std::string_view text) const {
  for (const auto& [key, vec] : embeddings) {
    if (key == text) return vec;
  }
  if (const auto* hit = longest_match(embeddings, text)) return hit->second;
  return embedding_default;
}

MockServer::MockServer(MockTable table)
    : table_(std::move(table)), server_(std::make_unique<httplib::Server>()) {
  failures_left_ = table_.fail_first;
  install_routes();
}

MockServer::~MockServer() { stop(); }

bool MockServer::should_fail() {
  int left = failures_left_.load();
  while (left > 0) {
    if (failures_left_.compare_exchange_weak(left, left - 1)) return true;
  }
  return false;
}

void MockServer::install_routes() {
  auto chat = [this](const httplib::Request& req, httplib::Response& res) {
    ++chat_requests_;
    if (should_fail()) return reply_json(res, 503, error_body("scripted failure"));
    json body;
    try {
      body = json::parse(req.body);
    } catch (const json::exception&) {
      return reply_json(res, 400, error_body("request body is not JSON"));
    }
    std::string content;
    if (body.contains("messages") && body["messages"].is_array()) {
      for (const auto& msg : body["messages"]) {
        if (msg.contains("content") && msg["content"].is_string()) {
          content += msg["content"].get<std::string>();
        }
      }
    }
    const auto reply = table_.chat_reply(content);
    if (!reply) return reply_json(res, 404, error_body("no scripted reply for request"));
    reply_json(res, 200,
               {{"id", "mock"},
                {"object", "chat.completion"},
                {"model", body.value("model", "")},
                {"choices", json::array({{{"index", 0},
                                          {"message", {{"role", "assistant"}, {"content", *reply}}},
                                          {"finish_reason", "stop"}}})}});
  };
  auto embeddings = [this](const httplib::Request& req, httplib::Response& res) {
    ++embedding_requests_;
    if (should_fail()) return reply_json(res, 503, error_body("scripted failure"));
    json body;
    try {
      body = json::parse(req.body);
    } catch (const json::exception&) {
      return reply_json(res, 400, error_body("request body is not JSON"));
    }
    std::vector<std::string> inputs;
    if (body.contains("input") && body["input"].is_string()) {
      inputs.push_back(body["input"].get<std::string>());
    } else if (body.contains("input") && body["input"].is_array()) {
      for (const auto& item : body["input"]) {
        if (!item.is_string()) return reply_json(res, 400, error_body("input must be strings"));
        inputs.push_back(item.get<std::string>());
      }
    } else {
      return reply_json(res, 400, error_body("missing input"));
    }
    json data = json::array();
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      const auto vec = table_.embedding_for(inputs[i]);
      if (!vec) return reply_json(res, 404, error_body("no scripted embedding for: " + inputs[i]));
      data.push_back({{"object", "embedding"}, {"index", i}, {"embedding", *vec}});
    }
    reply_json(res, 200, {{"object", "list"}, {"model", body.value("model", "")}, {"data", data}});
  };
  server_->Post("/v1/chat/completions", chat);
  server_->Post("/chat/completions", chat);
  server_->Post("/v1/embeddings", embeddings);
  server_->Post("/embeddings", embeddings);
  server_->Get("/stats", [this](const httplib::Request&, httplib::Response& res) {
    reply_json(res, 200,
               {{"chat_requests", chat_requests_.load()},
                {"embedding_requests", embedding_requests_.load()}});
  });
}

int MockServer::start(const std::string& host, int port) {
  host_ = host;
  if (port == 0) {
    port_ = server_->bind_to_any_port(host);
  } else {
    if (!server_->bind_to_port(host, port)) port_ = -1;
    else port_ = port;
  }
  if (port_ <= 0) throw std::runtime_error("mock server could not bind to " + host);
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return port_;
}

bool MockServer::listen(const std::string& host, int port) {
  host_ = host;
  if (port == 0) {
    port_ = server_->bind_to_any_port(host);
    if (port_ <= 0) return false;
  } else {
    if (!server_->bind_to_port(host, port)) return false;
    port_ = port;
  }
  return server_->listen_after_bind();
}

void MockServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

std::string MockServer::base_url() const {
  return "http://" + host_ + ":" + std::to_string(port_);
}

}  // namespace rewardkit
