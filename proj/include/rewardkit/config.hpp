#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rewardkit/advantage.hpp"
#include "rewardkit/ensemble.hpp"
#include "rewardkit/model_rewards.hpp"
#include "rewardkit/policy_sim.hpp"

namespace rewardkit {

struct RewardSpec {
  std::string name;
  std::string kind;  // format | cls | len | mllm | emb
  double scale = 1.0;
  MatchMode match = MatchMode::kGtInPred;       // cls only
  LengthGate gate = LengthGate::kRequireFormat;  // len only
};

struct CacheSettings {
  std::optional<std::filesystem::path> path;
  // Never contact services; misses are scoring errors.
  bool read_only = false;
};

struct SimulationSettings {
  std::vector<ResponseTemplate> templates;
  std::vector<double> initial_logits;
  std::string ground_truth = "answer";
  std::string dataset;
  std::size_t running_window = 0;
  std::size_t group_size = 8;
  double clip_epsilon = 0.2;
  double kl_beta = 0.04;
  double learning_rate = 0.5;
  std::size_t steps = 200;
};

// Everything a `score` or `simulate` run needs. Loaded from TOML:
//
//   seed, strategy, output_dir, parallelism, max_malformed_fraction
//   [bounds] l_min, l_max
//   [normalization] epsilon, weights
//   [[rewards]] name, kind, scale, match, require_format
//   [judge] endpoint, model, api_key_env, timeout_ms, max_retries, backoff_ms,
//           on_unparseable, template_file, parallelism, score_min, score_max
//   [embedding] endpoint, model, api_key_env, timeout_ms, max_retries, backoff_ms,
//               parallelism
//   [cache] path, read_only
//   [simulation] steps, group_size, clip_epsilon, kl_beta, learning_rate,
//                ground_truth, dataset, running_window,
//                [[simulation.templates]] think, answer, initial_logit
//
// REWARDKIT_JUDGE_ENDPOINT / REWARDKIT_EMBEDDING_ENDPOINT override endpoints.
struct RunConfig {
  std::vector<RewardSpec> rewards;
  LengthBounds bounds{kDefaultLengthMin, kDefaultLengthMax};
  NormalizationConfig normalization;
  Strategy strategy = Strategy::kMrn;
  std::optional<JudgeConfig> judge;
  std::optional<EmbeddingConfig> embedding;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "out";
  std::size_t parallelism = 1;
  double max_malformed_fraction = 0.1;
  CacheSettings cache;
  SimulationSettings simulation;

  static RunConfig parse(std::string_view toml_text, bool apply_env_overrides = true);
  static RunConfig load(const std::filesystem::path& path, bool apply_env_overrides = true);

  void validate() const;
  bool uses_model_rewards() const;
};

// Service handles behind the model-backed rewards; null members are allowed
// when the corresponding reward is disabled or the cache is read-only.
struct ModelServices {
  std::shared_ptr<ChatService> chat;
  std::shared_ptr<EmbeddingService> embeddings;
  std::shared_ptr<RewardCache> cache;
};

// HTTP clients for the configured endpoints plus the cache (loaded from disk
// when configured).
ModelServices make_model_services(const RunConfig& cfg);

RewardRegistry build_registry(const RunConfig& cfg, const ModelServices& services);

GrpoConfig make_grpo_config(const RunConfig& cfg);
SimulationEnv make_simulation_env(const RunConfig& cfg, const ModelServices& services);

}  // namespace rewardkit
