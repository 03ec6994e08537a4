#include "rewardkit/rule_rewards.hpp"

#include <utility>

#include "rewardkit/errors.hpp"

namespace rewardkit {

LengthBounds::LengthBounds(std::size_t l_min, std::size_t l_max) : l_min_(l_min), l_max_(l_max) {
  if (l_min > l_max) {
    throw ConfigError("length bounds require l_min <= l_max (got " + std::to_string(l_min) +
                      " > " + std::to_string(l_max) + ")");
  }
}

GroundTruth::GroundTruth(std::string label_in, std::string dataset_in)
    : label(std::move(label_in)), dataset(std::move(dataset_in)) {
  if (label.empty()) throw ConfigError("ground-truth label must be non-empty");
}

double format_reward(const ParsedResponse& resp) { return resp.format_valid ? 1.0 : 0.0; }

double classification_reward(const ParsedResponse& resp, const GroundTruth& gt, MatchMode mode) {
  if (!resp.answer) return 0.0;
  return substring_match(*resp.answer, gt.label, mode) ? 1.0 : 0.0;
}

double thinking_length_reward(const ParsedResponse& resp, const LengthBounds& bounds,
                              LengthGate gate) {
  if (!resp.think) return 0.0;
  if (gate == LengthGate::kRequireFormat && !resp.format_valid) return 0.0;
  return bounds.contains(resp.think_length) ? 1.0 : 0.0;
}

}  // namespace rewardkit
