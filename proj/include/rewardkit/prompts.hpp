#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace rewardkit {

enum class PromptKind { kAnswerOnly, kCot, kJudge, kSftCot };

PromptKind parse_prompt_kind(std::string_view name);
std::string_view to_string(PromptKind kind);

// Bundled template bodies. Placeholders: {DATASET}, {PRED}, {GT}, {SOLUTION}.
std::string_view default_template(PromptKind kind);

// answer_only/cot: DATASET; judge: PRED, GT; sft_cot: DATASET, SOLUTION.
std::vector<std::string_view> required_placeholders(PromptKind kind);

using PromptBindings = std::map<std::string, std::string, std::less<>>;

struct PromptTemplate {
  PromptKind kind;
  std::string body;

  static PromptTemplate bundled(PromptKind kind);
  // Throws ConfigError when a required placeholder is absent from the body.
  void validate() const;
};

// Single-pass substitution of every "{NAME}" whose NAME is bound; bound values
// are never re-scanned. Unbound braces are left untouched.
std::string substitute_placeholders(std::string_view body, const PromptBindings& bindings);

// Throws ConfigError if a required placeholder has no binding.
std::string render_prompt(const PromptTemplate& tpl, const PromptBindings& bindings);

}  // namespace rewardkit
