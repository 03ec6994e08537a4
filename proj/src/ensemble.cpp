#include "rewardkit/ensemble.hpp"

#include <set>
#include <utility>

#include "rewardkit/errors.hpp"

namespace rewardkit {

RewardRegistry& RewardRegistry::add(RewardEntry entry) {
  if (entry.name.empty()) throw ConfigError("reward name must be non-empty");
  if (!entry.fn) throw ConfigError("reward '" + entry.name + "' has no scoring function");
  for (const auto& existing : entries_) {
    if (existing.name == entry.name) throw ConfigError("duplicate reward name '" + entry.name + "'");
  }
  entries_.push_back(std::move(entry));
  return *this;
}

std::vector<std::string> RewardRegistry::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.name);
  return out;
}

bool RewardRegistry::offline() const {
  for (const auto& e : entries_) {
    if (!e.offline) return false;
  }
  return true;
}

RewardEntry make_format_reward(std::string name, double scale) {
  return {std::move(name), [](const ParsedResponse& r, const GroundTruth&) { return format_reward(r); },
          scale, true};
}

RewardEntry make_classification_reward(MatchMode mode, std::string name, double scale) {
  return {std::move(name),
          [mode](const ParsedResponse& r, const GroundTruth& gt) {
            return classification_reward(r, gt, mode);
          },
          scale, true};
}

RewardEntry make_length_reward(LengthBounds bounds, LengthGate gate, std::string name, double scale) {
  return {std::move(name),
          [bounds, gate](const ParsedResponse& r, const GroundTruth&) {
            return thinking_length_reward(r, bounds, gate);
          },
          scale, true};
}

RewardEntry make_judge_reward(std::shared_ptr<const JudgeReward> judge, std::string name,
                              double scale) {
  if (!judge) throw ConfigError("judge reward requires a configured judge");
  return {std::move(name),
          [judge = std::move(judge)](const ParsedResponse& r, const GroundTruth& gt) {
            return (*judge)(r, gt);
          },
          scale, false};
}

RewardEntry make_embedding_reward(std::shared_ptr<const EmbeddingReward> emb, std::string name,
                                  double scale) {
  if (!emb) throw ConfigError("embedding reward requires a configured embedding service");
  return {std::move(name),
          [emb = std::move(emb)](const ParsedResponse& r, const GroundTruth& gt) {
            return (*emb)(r, gt);
          },
          scale, false};
}

RewardRegistry make_rule_registry(LengthBounds bounds) {
  RewardRegistry reg;
  reg.add(make_format_reward()).add(make_classification_reward()).add(make_length_reward(bounds));
  return reg;
}

RewardRegistry make_default_registry(LengthBounds bounds, std::shared_ptr<const JudgeReward> judge,
                                     std::shared_ptr<const EmbeddingReward> emb) {
  RewardRegistry reg = make_rule_registry(bounds);
  reg.add(make_judge_reward(std::move(judge))).add(make_embedding_reward(std::move(emb)));
  return reg;
}

RewardMatrix score_parsed_group(const std::vector<ParsedResponse>& completions,
                                const GroundTruth& gt, const RewardRegistry& registry) {
  if (registry.empty()) throw ConfigError("reward registry is empty");
  const std::size_t k_count = registry.size();
  std::vector<double> values(completions.size() * k_count);
  for (std::size_t i = 0; i < completions.size(); ++i) {
    for (std::size_t k = 0; k < k_count; ++k) {
      const auto& entry = registry.entries()[k];
      values[i * k_count + k] = entry.scale * entry.fn(completions[i], gt);
    }
  }
  return RewardMatrix(registry.names(), completions.size(), std::move(values));
}

RewardMatrix score_group(const std::vector<std::string>& completions, const GroundTruth& gt,
                         const RewardRegistry& registry) {
  std::vector<ParsedResponse> parsed;
  parsed.reserve(completions.size());
  for (const auto& c : completions) parsed.push_back(parse_tagged_response(c));
  return score_parsed_group(parsed, gt, registry);
}

}  // namespace rewardkit
