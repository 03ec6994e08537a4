#pragma once

#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "rewardkit/advantage.hpp"
#include "rewardkit/model_rewards.hpp"
#include "rewardkit/response.hpp"
#include "rewardkit/rule_rewards.hpp"

namespace rewardkit {

using RewardFn = std::function<double(const ParsedResponse&, const GroundTruth&)>;

struct RewardEntry {
  std::string name;
  RewardFn fn;
  // Multiplies the raw score; lets an environment put components on different
  // scales (e.g. a 0/10 format reward next to a 0/1 accuracy reward).
  double scale = 1.0;
  // False for rewards backed by an external service.
  bool offline = true;
};

// Ordered list of enabled reward functions. Column order of every scored
// RewardMatrix equals registration order.
class RewardRegistry {
 public:
  RewardRegistry& add(RewardEntry entry);

  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  const std::vector<RewardEntry>& entries() const noexcept { return entries_; }
  std::vector<std::string> names() const;
  bool offline() const;

 private:
  std::vector<RewardEntry> entries_;
};

RewardEntry make_format_reward(std::string name = "format", double scale = 1.0);
RewardEntry make_classification_reward(MatchMode mode = MatchMode::kGtInPred,
                                       std::string name = "cls", double scale = 1.0);
RewardEntry make_length_reward(LengthBounds bounds,
                               LengthGate gate = LengthGate::kRequireFormat,
                               std::string name = "len", double scale = 1.0);
RewardEntry make_judge_reward(std::shared_ptr<const JudgeReward> judge,
                              std::string name = "mllm", double scale = 1.0);
RewardEntry make_embedding_reward(std::shared_ptr<const EmbeddingReward> emb,
                                  std::string name = "emb", double scale = 1.0);

// format, cls, len with the default bounds [0, 10].
RewardRegistry make_rule_registry(LengthBounds bounds = {kDefaultLengthMin, kDefaultLengthMax});

// format, cls, len, mllm, emb.
RewardRegistry make_default_registry(LengthBounds bounds, std::shared_ptr<const JudgeReward> judge,
                                     std::shared_ptr<const EmbeddingReward> emb);

// Scores already-parsed completions; one row per completion.
RewardMatrix score_parsed_group(const std::vector<ParsedResponse>& completions,
                                const GroundTruth& gt, const RewardRegistry& registry);

RewardMatrix score_group(const std::vector<std::string>& completions, const GroundTruth& gt,
                         const RewardRegistry& registry);

}  // namespace rewardkit
