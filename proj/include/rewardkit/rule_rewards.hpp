#pragma once

#include <cstddef>
#include <string>

#include "rewardkit/response.hpp"

namespace rewardkit {

// Closed interval [l_min, l_max] on think-block character length.
class LengthBounds {
 public:
  LengthBounds(std::size_t l_min, std::size_t l_max);

  std::size_t l_min() const noexcept { return l_min_; }
  std::size_t l_max() const noexcept { return l_max_; }
  bool contains(std::size_t length) const noexcept {
    return l_min_ <= length && length <= l_max_;
  }

 private:
  std::size_t l_min_;
  std::size_t l_max_;
};

inline constexpr std::size_t kDefaultLengthMin = 0;
inline constexpr std::size_t kDefaultLengthMax = 10;

struct GroundTruth {
  GroundTruth(std::string label, std::string dataset = {});

  std::string label;
  std::string dataset;
};

// Whether the length reward needs the full format or only a well-formed think block.
enum class LengthGate { kRequireFormat, kThinkOnly };

double format_reward(const ParsedResponse& resp);

double classification_reward(const ParsedResponse& resp, const GroundTruth& gt,
                             MatchMode mode = MatchMode::kGtInPred);

double thinking_length_reward(const ParsedResponse& resp, const LengthBounds& bounds,
                              LengthGate gate = LengthGate::kRequireFormat);

}  // namespace rewardkit
