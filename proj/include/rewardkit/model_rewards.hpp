#pragma once

#include <chrono>
#include <compare>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rewardkit/response.hpp"
#include "rewardkit/rule_rewards.hpp"

namespace rewardkit {

using EmbeddingVector = std::vector<double>;

enum class OnUnparseable { kError, kZero };

OnUnparseable parse_on_unparseable(std::string_view name);

struct RetryPolicy {
  // Retries after the first attempt; total attempts = max_retries + 1.
  int max_retries = 2;
  std::chrono::milliseconds initial_backoff{500};
};

struct JudgeConfig {
  std::string endpoint;
  std::string model_id;
  std::string prompt_template;  // defaults to the bundled judge template
  int score_min = 0;
  int score_max = 10;
  double temperature = 0.0;
  int max_tokens = 16;
  std::chrono::milliseconds timeout{30000};
  RetryPolicy retry;
  OnUnparseable on_unparseable = OnUnparseable::kError;
  std::string api_key_env;
  std::size_t parallelism = 8;

  JudgeConfig();
  void validate() const;
};

struct EmbeddingConfig {
  std::string endpoint;
  std::string model_id;
  std::chrono::milliseconds timeout{30000};
  RetryPolicy retry;
  std::string api_key_env;
  std::size_t parallelism = 8;

  void validate() const;
};

// Substitutes {PRED} and {GT} verbatim. Throws ConfigError when the template
// lacks either placeholder.
std::string render_judge_prompt(std::string_view pred, std::string_view gt, const JudgeConfig& cfg);

// First decimal number in the reply, clamped to [score_min, score_max], divided
// by score_max.
double parse_judge_score(std::string_view reply, const JudgeConfig& cfg);

// Dot product over the product of norms. Throws ScoringError on a dimension
// mismatch or a zero-norm vector.
double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

// ---------------------------------------------------------------------------
// Service interfaces. Implementations must be safe for concurrent calls.

struct ChatRequest {
  std::string model;
  std::string prompt;
  double temperature = 0.0;
  int max_tokens = 16;
};

class ChatService {
 public:
  virtual ~ChatService() = default;
  virtual std::string complete(const ChatRequest& request) = 0;
};

class EmbeddingService {
 public:
  virtual ~EmbeddingService() = default;
  virtual std::vector<EmbeddingVector> embed(const std::string& model,
                                             const std::vector<std::string>& texts) = 0;
};

// ---------------------------------------------------------------------------
// Cache

enum class ModelRewardKind { kMllm, kEmb };

struct RewardCacheKey {
  ModelRewardKind kind;
  std::string pred;  // normalized
  std::string gt;    // normalized
  std::string model_id;

  auto operator<=>(const RewardCacheKey&) const = default;
};

// Thread-safe memo of model-backed scores. Concurrent requests for one key
// share a single computation.
class RewardCache {
 public:
  // In read-only mode a miss raises ScoringError instead of computing.
  explicit RewardCache(bool read_only = false) : read_only_(read_only) {}

  double get_or_compute(const RewardCacheKey& key, const std::function<double()>& compute);
  std::optional<double> lookup(const RewardCacheKey& key) const;
  void insert(const RewardCacheKey& key, double score);
  std::size_t size() const;
  bool read_only() const noexcept { return read_only_; }

  // JSON array of {kind, pred, gt, model, score}, sorted by key.
  void load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

 private:
  bool read_only_;
  mutable std::mutex mutex_;
  std::map<RewardCacheKey, std::shared_future<double>> entries_;
};

// ---------------------------------------------------------------------------
// Rewards

// R_mllm. Missing answers short-circuit to 0 without a service call. The
// service sees normalized labels so that cache hits are exact replays.
class JudgeReward {
 public:
  JudgeReward(JudgeConfig cfg, std::shared_ptr<ChatService> service,
              std::shared_ptr<RewardCache> cache);

  double operator()(const ParsedResponse& resp, const GroundTruth& gt) const;
  const JudgeConfig& config() const noexcept { return cfg_; }

 private:
  JudgeConfig cfg_;
  std::shared_ptr<ChatService> service_;
  std::shared_ptr<RewardCache> cache_;
};

double mllm_accuracy_reward(const ParsedResponse& resp, const GroundTruth& gt,
                            const JudgeConfig& cfg, ChatService& service);

using EmbedFn = std::function<EmbeddingVector(std::string_view)>;

// R_emb = max(0, cos(e_pred, e_gt)); 0 for a missing answer.
double embedding_similarity_reward(const ParsedResponse& resp, const GroundTruth& gt,
                                   const EmbedFn& embed);

class EmbeddingReward {
 public:
  EmbeddingReward(EmbeddingConfig cfg, std::shared_ptr<EmbeddingService> service,
                  std::shared_ptr<RewardCache> cache);

  double operator()(const ParsedResponse& resp, const GroundTruth& gt) const;
  const EmbeddingConfig& config() const noexcept { return cfg_; }

 private:
  EmbeddingConfig cfg_;
  std::shared_ptr<EmbeddingService> service_;
  std::shared_ptr<RewardCache> cache_;
};

}  // namespace rewardkit
