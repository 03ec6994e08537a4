#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace rewardkit {

// A model completion split into its reasoning and answer blocks.
struct ParsedResponse {
  std::string raw;
  std::optional<std::string> think;
  std::optional<std::string> answer;
  bool format_valid = false;
  // Unicode scalar count of `think` (0 when absent).
  std::size_t think_length = 0;
};

// Parses "<think>...</think> <answer>...</answer>".
//
// format_valid requires the whole string (modulo surrounding whitespace) to be
// exactly one think block followed by exactly one answer block, separated only
// by whitespace. Nested or repeated tags invalidate the format. Independently
// of validity, `think`/`answer` are filled from the first well-formed pair of
// each tag, so a reversed or padded response still exposes its answer.
ParsedResponse parse_tagged_response(std::string_view raw);

// Inverse of parse for valid responses: "<think>T</think> <answer>A</answer>".
std::string render_tagged_response(std::string_view think, std::string_view answer);

// Count of UTF-8 scalar values (bytes that are not continuation bytes).
std::size_t utf8_length(std::string_view text);

// Whitespace-delimited word count.
std::size_t word_count(std::string_view text);

// Lowercased, punctuation-stripped, whitespace-collapsed label text.
class NormalizedLabel {
 public:
  explicit NormalizedLabel(std::string_view raw);

  const std::string& text() const noexcept { return text_; }
  bool empty() const noexcept { return text_.empty(); }

  friend bool operator==(const NormalizedLabel&, const NormalizedLabel&) = default;

 private:
  std::string text_;
};

// The punctuation set {. , ; : ! ? ' " ( ) [ ] _ -} becomes spaces, ASCII
// letters are lowercased, whitespace runs collapse to one space, ends trimmed.
// Non-ASCII bytes pass through unchanged.
NormalizedLabel normalize_label(std::string_view raw);

enum class MatchMode { kGtInPred, kEitherDirection };

// Containment test on normalized labels. An empty normalized ground truth never
// matches; likewise an empty prediction never matches in the reverse direction.
bool substring_match(std::string_view pred, std::string_view gt, MatchMode mode);

MatchMode parse_match_mode(std::string_view name);
std::string_view to_string(MatchMode mode);

}  // namespace rewardkit
