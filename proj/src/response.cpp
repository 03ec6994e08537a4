#include "rewardkit/response.hpp"

#include <algorithm>
#include <array>

#include "rewardkit/errors.hpp"

namespace rewardkit {

namespace {

constexpr std::string_view kThinkOpen = "<think>";
constexpr std::string_view kThinkClose = "</think>";
constexpr std::string_view kAnswerOpen = "<answer>";
constexpr std::string_view kAnswerClose = "</answer>";

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
  std::size_t count = 0;
  for (auto pos = haystack.find(needle); pos != std::string_view::npos;
       pos = haystack.find(needle, pos + needle.size())) {
    ++count;
  }
  return count;
}

// Content of the first `open`...`close` pair, if the close tag follows the open.
std::optional<std::string> extract_block(std::string_view s, std::string_view open,
                                         std::string_view close) {
  const auto begin = s.find(open);
  if (begin == std::string_view::npos) return std::nullopt;
  const auto content = begin + open.size();
  const auto end = s.find(close, content);
  if (end == std::string_view::npos) return std::nullopt;
  return std::string(s.substr(content, end - content));
}

bool is_strict_format(std::string_view raw) {
  const std::string_view s = trim(raw);
  for (auto tag : {kThinkOpen, kThinkClose, kAnswerOpen, kAnswerClose}) {
    if (count_occurrences(s, tag) != 1) return false;
  }
  if (!s.starts_with(kThinkOpen) || !s.ends_with(kAnswerClose)) return false;
  const auto think_close = s.find(kThinkClose);
  const auto answer_open = s.find(kAnswerOpen);
  if (think_close == std::string_view::npos || answer_open == std::string_view::npos) return false;
  const auto gap_begin = think_close + kThinkClose.size();
  if (answer_open < gap_begin) return false;
  const auto gap = s.substr(gap_begin, answer_open - gap_begin);
  return std::all_of(gap.begin(), gap.end(), is_space);
}

bool is_label_punct(char c) {
  static constexpr std::string_view kPunct = ".,;:!?'\"()[]_-";
  return kPunct.find(c) != std::string_view::npos;
}

bool contains(const NormalizedLabel& haystack, const NormalizedLabel& needle) {
  if (needle.empty()) return false;
  return haystack.text().find(needle.text()) != std::string::npos;
}

}  // namespace

std::size_t utf8_length(std::string_view text) {
  return static_cast<std::size_t>(std::count_if(text.begin(), text.end(), [](char c) {
    return (static_cast<unsigned char>(c) & 0xC0U) != 0x80U;
  }));
}

std::size_t word_count(std::string_view text) {
  std::size_t words = 0;
  bool in_word = false;
  for (char c : text) {
    if (is_space(c)) {
      in_word = false;
    } else if (!in_word) {
      in_word = true;
      ++words;
    }
  }
  return words;
}

ParsedResponse parse_tagged_response(std::string_view raw) {
  ParsedResponse out;
  out.raw = std::string(raw);
  out.think = extract_block(raw, kThinkOpen, kThinkClose);
  out.answer = extract_block(raw, kAnswerOpen, kAnswerClose);
  out.format_valid = out.think && out.answer && is_strict_format(raw);
  out.think_length = out.think ? utf8_length(*out.think) : 0;
  return out;
}

std::string render_tagged_response(std::string_view think, std::string_view answer) {
  std::string out;
  out.reserve(think.size() + answer.size() + 36);
  out.append(kThinkOpen).append(think).append(kThinkClose);
  out.push_back(' ');
  out.append(kAnswerOpen).append(answer).append(kAnswerClose);
  return out;
}

NormalizedLabel::NormalizedLabel(std::string_view raw) {
  text_.reserve(raw.size());
  bool pending_space = false;
  for (char c : raw) {
    if (is_space(c) || is_label_punct(c)) {
      pending_space = !text_.empty();
      continue;
    }
    if (pending_space) {
      text_.push_back(' ');
      pending_space = false;
    }
    text_.push_back((c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c);
  }
}

NormalizedLabel normalize_label(std::string_view raw) { return NormalizedLabel(raw); }

bool substring_match(std::string_view pred, std::string_view gt, MatchMode mode) {
  const NormalizedLabel p(pred);
  const NormalizedLabel g(gt);
  if (g.empty()) return false;
  if (contains(p, g)) return true;
  return mode == MatchMode::kEitherDirection && contains(g, p);
}

MatchMode parse_match_mode(std::string_view name) {
  if (name == "gt_in_pred") return MatchMode::kGtInPred;
  if (name == "either_direction") return MatchMode::kEitherDirection;
  throw ConfigError("unknown match mode '" + std::string(name) +
                    "' (expected gt_in_pred or either_direction)");
}

std::string_view to_string(MatchMode mode) {
  return mode == MatchMode::kGtInPred ? "gt_in_pred" : "either_direction";
}

}  // namespace rewardkit
