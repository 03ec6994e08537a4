#include <doctest.h>

#include <atomic>
#include <cmath>
#include <thread>

#include "rewardkit/errors.hpp"
#include "rewardkit/http_service.hpp"
#include "rewardkit/mock_server.hpp"
#include "rewardkit/model_rewards.hpp"
#include "test_util.hpp"

using namespace rewardkit;

namespace {

ParsedResponse answer(const std::string& a) { return parse_tagged_response("<think></think><answer>" + a + "</answer>"); }

class CountingChat : public ChatService {
 public:
  explicit CountingChat(std::string reply) : reply_(std::move(reply)) {}
  std::string complete(const ChatRequest& req) override {
    ++calls;
    last_prompt = req.prompt;
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
    return reply_;
  }
  std::atomic<int> calls{0};
  std::string last_prompt;

 private:
  std::string reply_;
};

class FixedEmbeddings : public EmbeddingService {
 public:
  std::vector<EmbeddingVector> embed(const std::string&, const std::vector<std::string>& texts) override {
    ++calls;
    std::vector<EmbeddingVector> out;
    for (const auto& t : texts) out.push_back(t == "rose" ? EmbeddingVector{1, 0} : EmbeddingVector{-1, 0});
    return out;
  }
  std::atomic<int> calls{0};
};

JudgeConfig judge_for(const MockServer& server) {
  JudgeConfig cfg;
  cfg.endpoint = server.base_url() + "/v1/chat/completions";
  cfg.model_id = "mock-judge";
  cfg.retry.initial_backoff = std::chrono::milliseconds(1);
  return cfg;
}

}  // namespace

TEST_CASE("judge prompt rendering") {
  const JudgeConfig cfg;
  const auto text = render_judge_prompt("Boeing 707", "707-320", cfg);
  CHECK(text.find("Predicted Answer: \"Boeing 707\"") != std::string::npos);
  CHECK(text.find("Correct Answer: \"707-320\"") != std::string::npos);
  const auto same = render_judge_prompt("x", "x", cfg);
  CHECK(same.find("Predicted Answer: \"x\"\n\nCorrect Answer: \"x\"") != std::string::npos);
  JudgeConfig broken;
  broken.prompt_template = "Predicted Answer: \"{PRED}\"";
  CHECK_THROWS_AS(render_judge_prompt("a", "b", broken), ConfigError);
}

TEST_CASE("judge score parsing") {
  JudgeConfig cfg;
  CHECK(parse_judge_score("Score: 6", cfg) == 0.6);
  CHECK(parse_judge_score("10", cfg) == 1.0);
  CHECK(parse_judge_score("0", cfg) == 0.0);
  CHECK(parse_judge_score(" 7.5 out of 10", cfg) == 0.75);
  CHECK(parse_judge_score("12", cfg) == 1.0);
  CHECK(parse_judge_score("-3", cfg) == 0.0);
  CHECK_THROWS_AS(parse_judge_score("no idea", cfg), ScoringError);
  cfg.on_unparseable = OnUnparseable::kZero;
  CHECK(parse_judge_score("no idea", cfg) == 0.0);
}

TEST_CASE("cosine similarity") {
  CHECK(cosine_similarity({1, 2, 3}, {1, 2, 3}) == doctest::Approx(1.0));
  CHECK(cosine_similarity({1, 0}, {0, 1}) == 0.0);
  CHECK(cosine_similarity({1, 2}, {-1, -2}) == doctest::Approx(-1.0));
  CHECK_THROWS_AS(cosine_similarity({1, 0}, {1, 0, 0}), ScoringError);
  CHECK_THROWS_AS(cosine_similarity({0, 0}, {1, 0}), ScoringError);
}

TEST_CASE("embedding reward clamps below at zero") {
  const GroundTruth gt("rose");
  auto same = [](std::string_view) { return EmbeddingVector{0.5, 0.5}; };
  CHECK(embedding_similarity_reward(answer("rose"), gt, same) == doctest::Approx(1.0));
  auto opposite = [](std::string_view t) { return t == "rose" ? EmbeddingVector{1, 1} : EmbeddingVector{-1, -1}; };
  CHECK(embedding_similarity_reward(answer("tulip"), gt, opposite) == 0.0);
  auto orth = [](std::string_view t) { return t == "rose" ? EmbeddingVector{1, 0} : EmbeddingVector{0, 1}; };
  CHECK(embedding_similarity_reward(answer("tulip"), gt, orth) == 0.0);
  CHECK(embedding_similarity_reward(parse_tagged_response("<think>x</think>"), gt, same) == 0.0);
}

TEST_CASE("judge reward short-circuits a missing answer") {
  auto chat = std::make_shared<CountingChat>("10");
  JudgeReward judge(JudgeConfig{}, chat, nullptr);
  CHECK(judge(parse_tagged_response("<think>no answer here</think>"), GroundTruth("rose")) == 0.0);
  CHECK(judge(answer("  ..  "), GroundTruth("rose")) == 0.0);
  CHECK(chat->calls == 0);
  CHECK(judge(answer("Rose"), GroundTruth("rose")) == 1.0);
  CHECK(chat->calls == 1);
  CHECK(chat->last_prompt.find("Predicted Answer: \"rose\"\n\nCorrect Answer: \"rose\"") != std::string::npos);
}

TEST_CASE("cache is transparent and shares concurrent computations") {
  auto chat = std::make_shared<CountingChat>("Score: 6");
  auto cache = std::make_shared<RewardCache>();
  JudgeReward cached(JudgeConfig{}, chat, cache);
  auto plain_chat = std::make_shared<CountingChat>("Score: 6");
  JudgeReward uncached(JudgeConfig{}, plain_chat, nullptr);

  std::vector<double> results(64);
  {
    std::vector<std::jthread> threads;
    for (std::size_t t = 0; t < results.size(); ++t) {
      threads.emplace_back([&, t] { results[t] = cached(answer(t % 2 ? "Boeing 707" : "boeing-707"), GroundTruth("707-320")); });
    }
  }
  for (double r : results) CHECK(r == uncached(answer("Boeing 707"), GroundTruth("707-320")));
  CHECK(chat->calls == 1);
  CHECK(cache->size() == 1);
}

TEST_CASE("failed computations are not cached") {
  RewardCache cache;
  const RewardCacheKey key{ModelRewardKind::kMllm, "a", "b", "m"};
  CHECK_THROWS_AS(cache.get_or_compute(key, []() -> double { throw ScoringError("boom"); }), ScoringError);
  CHECK(cache.size() == 0);
  CHECK(cache.get_or_compute(key, [] { return 0.25; }) == 0.25);
  CHECK(cache.lookup(key) == 0.25);
}

TEST_CASE("read-only cache raises on a miss") {
  RewardCache cache(true);
  const RewardCacheKey key{ModelRewardKind::kEmb, "a", "b", "m"};
  CHECK_THROWS_AS(cache.get_or_compute(key, [] { return 1.0; }), ScoringError);
  cache.insert(key, 0.5);
  CHECK(cache.get_or_compute(key, [] { return 1.0; }) == 0.5);
}

TEST_CASE("cache round-trips through a file") {
  rktest::TempDir dir("cache");
  RewardCache cache;
  cache.insert({ModelRewardKind::kMllm, "boeing 707", "707 320", "judge"}, 0.6);
  cache.insert({ModelRewardKind::kEmb, "a", "b", "emb"}, 0.1 + 0.2);
  cache.save(dir / "cache.json");
  RewardCache loaded;
  loaded.load(dir / "cache.json");
  CHECK(loaded.size() == 2);
  CHECK(loaded.lookup({ModelRewardKind::kMllm, "boeing 707", "707 320", "judge"}) == 0.6);
  CHECK(loaded.lookup({ModelRewardKind::kEmb, "a", "b", "emb"}) == 0.1 + 0.2);
}

TEST_CASE("embedding reward caches symmetric pairs once") {
  auto svc = std::make_shared<FixedEmbeddings>();
  auto cache = std::make_shared<RewardCache>();
  EmbeddingReward emb(EmbeddingConfig{}, svc, cache);
  CHECK(emb(answer("rose"), GroundTruth("rose")) == doctest::Approx(1.0));
  CHECK(emb(answer("tulip"), GroundTruth("rose")) == 0.0);
  CHECK(emb(answer("rose"), GroundTruth("tulip")) == 0.0);
  CHECK(svc->calls == 2);
}

TEST_CASE("missing service is a scoring error") {
  JudgeReward judge(JudgeConfig{}, nullptr, nullptr);
  CHECK_THROWS_AS(judge(answer("rose"), GroundTruth("rose")), ScoringError);
}

TEST_CASE("endpoint parsing") {
  const auto e = parse_endpoint("http://127.0.0.1:8080/v1/chat/completions");
  CHECK(e.origin == "http://127.0.0.1:8080");
  CHECK(e.path == "/v1/chat/completions");
  CHECK(parse_endpoint("https://api.example.com").path == "/");
  CHECK_THROWS_AS(parse_endpoint("not a url"), ConfigError);
}

TEST_CASE("retries back off exponentially then fail") {
  RetryPolicy policy;
  policy.max_retries = 2;
  policy.initial_backoff = std::chrono::milliseconds(500);
  std::vector<long long> sleeps;
  int attempts = 0;
  auto sleeper = [&](std::chrono::milliseconds d) { sleeps.push_back(d.count()); };
  CHECK_THROWS_AS(with_retries(policy, [&]() -> std::string { ++attempts; throw TransportError("down", true); }, sleeper),
                  ScoringError);
  CHECK(attempts == 3);
  CHECK(sleeps == std::vector<long long>{500, 1000});

  attempts = 0;
  CHECK_THROWS_AS(with_retries(policy, [&]() -> std::string { ++attempts; throw TransportError("bad request", false); }, sleeper),
                  ScoringError);
  CHECK(attempts == 1);

  attempts = 0;
  CHECK(with_retries(policy, [&]() -> std::string {
          if (++attempts < 3) throw TransportError("busy", true);
          return "ok";
        }, sleeper) == "ok");
}

TEST_CASE("mock table lookups") {
  const auto table = MockTable::from_json_text(R"({"chat": {"707": "5", "boeing 707": "6"}, "chat_default": "1",
      "embeddings": {"rose": [1, 0], "pink rose": [0, 1]}})");
  CHECK(table.chat_reply("... boeing 707 ...") == "6");
  CHECK(table.chat_reply("707 only") == "5");
  CHECK(table.chat_reply("nothing") == "1");
  CHECK(table.embedding_for("rose") == EmbeddingVector{1, 0});
  CHECK(table.embedding_for("pink rose") == EmbeddingVector{0, 1});
  CHECK_FALSE(table.embedding_for("tulip"));
  CHECK_THROWS_AS(MockTable::from_json_text("[1, 2]"), ValidationError);
}

TEST_CASE("judge exemplars replay through the mock service") {
  MockServer server(MockTable::load(std::filesystem::path(RK_FIXTURES) / "judge_exemplars.json"));
  server.start();
  const JudgeConfig cfg = judge_for(server);
  auto http = std::make_shared<HttpChatService>(cfg);
  JudgeReward judge(cfg, http, std::make_shared<RewardCache>());
  CHECK(judge(answer("2007 Dodge Dakota Club Cab"), GroundTruth("2007 Dodge Dakota Club Cab")) == 1.0);
  CHECK(judge(answer("Boeing 707"), GroundTruth("707-320")) == 0.6);
  CHECK(judge(answer("Nasturtium"), GroundTruth("watercress")) == 0.0);
  CHECK(judge(answer("Boeing 707"), GroundTruth("707-320")) == 0.6);
  CHECK(server.chat_requests() == 3);
}

TEST_CASE("unmatched judge request is a scoring error") {
  MockServer server(MockTable::from_json_text(R"({"chat": {"zzz": "1"}})"));
  server.start();
  const JudgeConfig cfg = judge_for(server);
  JudgeReward judge(cfg, std::make_shared<HttpChatService>(cfg), nullptr);
  CHECK_THROWS_AS(judge(answer("rose"), GroundTruth("rose")), ScoringError);
  CHECK(server.chat_requests() == 1);
}

TEST_CASE("transient 503s are retried") {
  MockServer server(MockTable::from_json_text(R"({"chat_default": "Score: 8", "fail_first": 2})"));
  server.start();
  JudgeConfig cfg = judge_for(server);
  HttpChatService chat(cfg);
  CHECK(chat.complete({"m", "hello", 0.0, 16}) == "Score: 8");
  CHECK(server.chat_requests() == 3);

  MockServer stubborn(MockTable::from_json_text(R"({"chat_default": "1", "fail_first": 5})"));
  stubborn.start();
  cfg = judge_for(stubborn);
  HttpChatService failing(cfg);
  CHECK_THROWS_AS(failing.complete({"m", "hello", 0.0, 16}), ScoringError);
  CHECK(stubborn.chat_requests() == 3);
}

TEST_CASE("unreachable endpoint fails after retries") {
  JudgeConfig cfg;
  cfg.endpoint = "http://127.0.0.1:9/v1/chat/completions";
  cfg.retry.max_retries = 1;
  cfg.retry.initial_backoff = std::chrono::milliseconds(1);
  cfg.timeout = std::chrono::milliseconds(500);
  HttpChatService chat(cfg);
  CHECK_THROWS_AS(chat.complete({"m", "hi", 0.0, 16}), ScoringError);
}

TEST_CASE("embeddings over http") {
  MockServer server(MockTable::load(std::filesystem::path(RK_FIXTURES) / "judge_exemplars.json"));
  server.start();
  EmbeddingConfig cfg;
  cfg.endpoint = server.base_url() + "/v1/embeddings";
  cfg.model_id = "mock-emb";
  auto svc = std::make_shared<HttpEmbeddingService>(cfg);
  const auto vecs = svc->embed("mock-emb", {"dodge dakota", "2007 dodge dakota club cab"});
  REQUIRE(vecs.size() == 2);
  CHECK(vecs[0] == EmbeddingVector{1, 0, 0});
  EmbeddingReward emb(cfg, svc, nullptr);
  CHECK(emb(answer("2007 Dodge Dakota Club Cab"), GroundTruth("Dodge Dakota")) == doctest::Approx(0.8));
  CHECK(emb(answer("Nasturtium"), GroundTruth("watercress")) == 0.0);
}
