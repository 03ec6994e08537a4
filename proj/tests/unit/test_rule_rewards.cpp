#include <doctest.h>

#include <random>

#include "rewardkit/errors.hpp"
#include "rewardkit/rule_rewards.hpp"

using namespace rewardkit;

namespace {
ParsedResponse P(const std::string& s) { return parse_tagged_response(s); }
}  // namespace

TEST_CASE("format reward") {
  CHECK(format_reward(P("<think>a</think> <answer>b</answer>")) == 1.0);
  CHECK(format_reward(P("<think>a</think>")) == 0.0);
  CHECK(format_reward(P("")) == 0.0);
}

TEST_CASE("classification reward") {
  const GroundTruth dakota("Dodge Dakota", "cars");
  CHECK(classification_reward(P("<think></think><answer>2007 Dodge Dakota Club Cab</answer>"), dakota) == 1.0);
  CHECK(classification_reward(P("<think>no answer</think>"), dakota) == 0.0);
  CHECK(classification_reward(P("<think></think><answer>watercress</answer>"), GroundTruth("Nasturtium")) == 0.0);
  // answer extracted even from a badly formatted response
  CHECK(classification_reward(P("<answer>dodge dakota</answer>"), dakota) == 1.0);
  CHECK(classification_reward(P("<think></think><answer>Dodge</answer>"), dakota, MatchMode::kEitherDirection) == 1.0);
  CHECK(classification_reward(P("<think></think><answer>Dodge</answer>"), dakota, MatchMode::kGtInPred) == 0.0);
}

TEST_CASE("ground truth must be non-empty") {
  CHECK_THROWS_AS(GroundTruth(""), ConfigError);
}

TEST_CASE("thinking length reward") {
  const LengthBounds b(0, 10);
  CHECK(thinking_length_reward(P("<think>brief</think> <answer>x</answer>"), b) == 1.0);
  CHECK(thinking_length_reward(P("<think>" + std::string(11, 'a') + "</think> <answer>x</answer>"), b) == 0.0);
  CHECK(thinking_length_reward(P("<answer>x</answer>"), b) == 0.0);
  CHECK(thinking_length_reward(P("<think></think> <answer>x</answer>"), b) == 1.0);
  CHECK(thinking_length_reward(P("<think>" + std::string(10, 'a') + "</think> <answer>x</answer>"), b) == 1.0);
}

TEST_CASE("length gate") {
  const LengthBounds b(0, 10);
  const auto no_answer = P("<think>short</think>");
  CHECK(thinking_length_reward(no_answer, b, LengthGate::kRequireFormat) == 0.0);
  CHECK(thinking_length_reward(no_answer, b, LengthGate::kThinkOnly) == 1.0);
}

TEST_CASE("bounds validation") {
  CHECK_THROWS_AS(LengthBounds(5, 4), ConfigError);
  const LengthBounds point(3, 3);
  CHECK(point.contains(3));
  CHECK_FALSE(point.contains(2));
  CHECK_FALSE(point.contains(4));
}

TEST_CASE("rule rewards are binary and length reward matches the interval") {
  std::mt19937 rng(3);
  const std::vector<std::string> pieces = {"<think>", "</think>", "<answer>", "</answer>", "rose", " ",
                                           "pink primrose", "abcdefghij", "\n"};
  for (int trial = 0; trial < 2000; ++trial) {
    std::string s;
    for (int i = static_cast<int>(rng() % 8); i > 0; --i) s += pieces[rng() % pieces.size()];
    const auto p = P(s);
    const std::size_t lo = rng() % 12;
    const LengthBounds b(lo, lo + rng() % 12);
    for (double r : {format_reward(p), classification_reward(p, GroundTruth("rose")),
                     thinking_length_reward(p, b)}) {
      CHECK((r == 0.0 || r == 1.0));
    }
    const bool expected = p.format_valid && p.think && b.contains(p.think_length);
    CHECK(thinking_length_reward(p, b) == (expected ? 1.0 : 0.0));
  }
}
