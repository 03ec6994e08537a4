#include "rewardkit/prompts.hpp"

#include "rewardkit/errors.hpp"
#include "rewardkit/model_rewards.hpp"

namespace rewardkit {

namespace {

constexpr std::string_view kAnswerOnlyTemplate =
    "This is an image containing an {DATASET}. Please identify the {DATASET} of the {DATASET} "
    "based on the image. Only provide the final answer directly, without any explanation or "
    "special formatting.";

constexpr std::string_view kCotTemplate =
    "This is an image containing an {DATASET}. Please identify the {DATASET} of the {DATASET} "
    "based on the image. Output the thinking process in <think>...</think> and final answer in "
    "<answer>...</answer> tags. The output answer format should be as follows: "
    "<think>...</think> <answer>species name</answer>. Please strictly follow the format.\"";

constexpr std::string_view kJudgeTemplate =
    "You are a scoring assistant. Based on the similarity between the \"Predicted Answer\" and "
    "the \"Correct Answer\", provide a score from 0 to 10. A score of 10 means a perfect match, "
    "and 0 means a complete mismatch. You must output only the numerical score.\n\n"
    "---\n\n"
    "[Example 1]\n\n"
    "Predicted Answer: \"2007 Dodge Dakota Club Cab\"\n\n"
    "Correct Answer: \"2007 Dodge Dakota Club Cab\"\n\n"
    "Score: 10\n\n"
    "---\n\n"
    "[Example 2]\n\n"
    "Predicted Answer: \"Boeing 707\"\n\n"
    "Correct Answer: \"707-320\"\n\n"
    "Score: 6\n\n"
    "---\n\n"
    "[Example 3]\n\n"
    "Predicted Answer: \"Nasturtium\"\n\n"
    "Correct Answer: \"watercress\"\n\n"
    "Score: 0\n\n"
    "---\n\n"
    "[Your Task]\n\n"
    "Predicted Answer: \"{PRED}\"\n\n"
    "Correct Answer: \"{GT}\"\n\n"
    "Score:";

// The original instance is written for pets; the category is lifted into {DATASET}.
constexpr std::string_view kSftCotTemplate =
    "This is an image containing a {DATASET}. Please identify the species of the {DATASET} "
    "based on the image.\n"
    "Output the thinking process in <think> </think> and final answer in <answer> </answer> "
    "tags.The output answer format should be as follows:\n"
    "<think> ... </think> <answer>species name</answer>\n"
    "Please strictly follow the format. The ground truth answer is {SOLUTION}. Limit your "
    "response to 100 words.";

bool is_placeholder_char(char c) { return (c >= 'A' && c <= 'Z') || c == '_'; }

}  // namespace

PromptKind parse_prompt_kind(std::string_view name) {
  if (name == "answer_only") return PromptKind::kAnswerOnly;
  if (name == "cot") return PromptKind::kCot;
  if (name == "judge") return PromptKind::kJudge;
  if (name == "sft_cot") return PromptKind::kSftCot;
  throw ConfigError("unknown prompt kind '" + std::string(name) +
                    "' (expected answer_only, cot, judge or sft_cot)");
}

std::string_view to_string(PromptKind kind) {
  switch (kind) {
    case PromptKind::kAnswerOnly: return "answer_only";
    case PromptKind::kCot: return "cot";
    case PromptKind::kJudge: return "judge";
    case PromptKind::kSftCot: return "sft_cot";
  }
  return "unknown";
}

std::string_view default_template(PromptKind kind) {
  switch (kind) {
    case PromptKind::kAnswerOnly: return kAnswerOnlyTemplate;
    case PromptKind::kCot: return kCotTemplate;
    case PromptKind::kJudge: return kJudgeTemplate;
    case PromptKind::kSftCot: return kSftCotTemplate;
  }
  return {};
}

std::vector<std::string_view> required_placeholders(PromptKind kind) {
  switch (kind) {
    case PromptKind::kAnswerOnly:
    case PromptKind::kCot: return {"DATASET"};
    case PromptKind::kJudge: return {"PRED", "GT"};
    case PromptKind::kSftCot: return {"DATASET", "SOLUTION"};
  }
  return {};
}

PromptTemplate PromptTemplate::bundled(PromptKind kind) {
  return PromptTemplate{kind, std::string(default_template(kind))};
}

void PromptTemplate::validate() const {
  for (auto name : required_placeholders(kind)) {
    const std::string token = "{" + std::string(name) + "}";
    if (body.find(token) == std::string::npos) {
      throw ConfigError(std::string(to_string(kind)) + " template is missing placeholder " + token);
    }
  }
}

std::string substitute_placeholders(std::string_view body, const PromptBindings& bindings) {
  std::string out;
  out.reserve(body.size());
  std::size_t i = 0;
  while (i < body.size()) {
    if (body[i] == '{') {
      std::size_t j = i + 1;
      while (j < body.size() && is_placeholder_char(body[j])) ++j;
      if (j < body.size() && body[j] == '}' && j > i + 1) {
        const auto it = bindings.find(body.substr(i + 1, j - i - 1));
        if (it != bindings.end()) {
          out += it->second;
          i = j + 1;
          continue;
        }
      }
    }
    out.push_back(body[i]);
    ++i;
  }
  return out;
}

std::string render_prompt(const PromptTemplate& tpl, const PromptBindings& bindings) {
  tpl.validate();
  for (auto name : required_placeholders(tpl.kind)) {
    if (bindings.find(name) == bindings.end()) {
      throw ConfigError("missing binding for {" + std::string(name) + "} in " +
                        std::string(to_string(tpl.kind)) + " prompt");
    }
  }
  if (tpl.kind == PromptKind::kJudge) {
    JudgeConfig cfg;
    cfg.prompt_template = tpl.body;
    return render_judge_prompt(bindings.find("PRED")->second, bindings.find("GT")->second, cfg);
  }
  return substitute_placeholders(tpl.body, bindings);
}

}  // namespace rewardkit
