#include "rewardkit/model_rewards.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <utility>

#include <nlohmann/json.hpp>

#include "rewardkit/errors.hpp"
#include "rewardkit/prompts.hpp"

namespace rewardkit {

using json = nlohmann::json;

namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }

std::optional<double> first_number(std::string_view text) {
  for (std::size_t i = 0; i < text.size(); ++i) {
    const bool digit_start = is_digit(text[i]);
    const bool dot_start = text[i] == '.' && i + 1 < text.size() && is_digit(text[i + 1]);
    if (!digit_start && !dot_start) continue;
    std::size_t begin = i;
    if (begin > 0 && text[begin - 1] == '-') --begin;
    std::size_t end = i;
    while (end < text.size() && is_digit(text[end])) ++end;
    if (end + 1 < text.size() && text[end] == '.' && is_digit(text[end + 1])) {
      ++end;
      while (end < text.size() && is_digit(text[end])) ++end;
    }
    // from_chars rejects a leading '.', so parse "-.5"/".5" with a zero prefix.
    std::string token(text.substr(begin, end - begin));
    if (const auto dot = token.find('.'); dot == 0 || (dot == 1 && token[0] == '-')) {
      token.insert(dot, "0");
    }
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec == std::errc() && ptr == token.data() + token.size()) return value;
    return std::nullopt;
  }
  return std::nullopt;
}

std::string_view kind_name(ModelRewardKind kind) {
  return kind == ModelRewardKind::kMllm ? "mllm" : "emb";
}

ModelRewardKind parse_kind(std::string_view name) {
  if (name == "mllm") return ModelRewardKind::kMllm;
  if (name == "emb") return ModelRewardKind::kEmb;
  throw ValidationError("unknown cache entry kind '" + std::string(name) + "'");
}

double clamp_unit(double x) { return std::clamp(x, 0.0, 1.0); }

}  // namespace

OnUnparseable parse_on_unparseable(std::string_view name) {
  if (name == "error") return OnUnparseable::kError;
  if (name == "zero") return OnUnparseable::kZero;
  throw ConfigError("on_unparseable must be 'error' or 'zero', got '" + std::string(name) + "'");
}

JudgeConfig::JudgeConfig() : prompt_template(default_template(PromptKind::kJudge)) {}

void JudgeConfig::validate() const {
  if (score_min >= score_max) throw ConfigError("judge score_min must be below score_max");
  if (score_max <= 0) throw ConfigError("judge score_max must be positive");
  if (timeout.count() <= 0) throw ConfigError("judge timeout must be positive");
  if (retry.max_retries < 0) throw ConfigError("judge max_retries must be >= 0");
  if (parallelism == 0) throw ConfigError("judge parallelism must be >= 1");
  PromptTemplate{PromptKind::kJudge, prompt_template}.validate();
}

void EmbeddingConfig::validate() const {
  if (timeout.count() <= 0) throw ConfigError("embedding timeout must be positive");
  if (retry.max_retries < 0) throw ConfigError("embedding max_retries must be >= 0");
  if (parallelism == 0) throw ConfigError("embedding parallelism must be >= 1");
}

std::string render_judge_prompt(std::string_view pred, std::string_view gt, const JudgeConfig& cfg) {
  PromptTemplate{PromptKind::kJudge, cfg.prompt_template}.validate();
  return substitute_placeholders(cfg.prompt_template,
                                 {{"PRED", std::string(pred)}, {"GT", std::string(gt)}});
}

double parse_judge_score(std::string_view reply, const JudgeConfig& cfg) {
  const auto value = first_number(reply);
  if (!value) {
    if (cfg.on_unparseable == OnUnparseable::kZero) return 0.0;
    throw ScoringError("judge reply contains no score: \"" + std::string(reply) + "\"");
  }
  const double clamped = std::clamp(*value, static_cast<double>(cfg.score_min),
                                    static_cast<double>(cfg.score_max));
  return clamped / static_cast<double>(cfg.score_max);
}

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.empty() || a.size() != b.size()) {
    throw ScoringError("embedding dimension mismatch (" + std::to_string(a.size()) + " vs " +
                       std::to_string(b.size()) + ")");
  }
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw ScoringError("zero-norm embedding vector");
  const double cos = dot / (std::sqrt(na) * std::sqrt(nb));
  if (!std::isfinite(cos)) throw ScoringError("non-finite cosine similarity");
  return std::clamp(cos, -1.0, 1.0);
}

// ---------------------------------------------------------------------------

double RewardCache::get_or_compute(const RewardCacheKey& key,
                                   const std::function<double()>& compute) {
  std::promise<double> promise;
  std::shared_future<double> future;
  bool owner = false;
  {
    std::lock_guard lock(mutex_);
    if (auto it = entries_.find(key); it != entries_.end()) {
      future = it->second;
    } else {
      if (read_only_) {
        throw ScoringError("cache miss for " + std::string(kind_name(key.kind)) + " reward (pred=\"" +
                           key.pred + "\", gt=\"" + key.gt + "\", model=" + key.model_id +
                           ") in cache-only mode");
      }
      future = promise.get_future().share();
      entries_.emplace(key, future);
      owner = true;
    }
  }
  if (owner) {
    try {
      promise.set_value(compute());
    } catch (...) {
      {
        std::lock_guard lock(mutex_);
        entries_.erase(key);
      }
      promise.set_exception(std::current_exception());
    }
  }
  return future.get();
}

std::optional<double> RewardCache::lookup(const RewardCacheKey& key) const {
  std::shared_future<double> future;
  {
    std::lock_guard lock(mutex_);
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    future = it->second;
  }
  if (future.wait_for(std::chrono::seconds(0)) != std::future_status::ready) return std::nullopt;
  try {
    return future.get();
  } catch (...) {
    return std::nullopt;
  }
}

void RewardCache::insert(const RewardCacheKey& key, double score) {
  std::promise<double> promise;
  promise.set_value(score);
  std::lock_guard lock(mutex_);
  entries_.insert_or_assign(key, promise.get_future().share());
}

std::size_t RewardCache::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

void RewardCache::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open reward cache " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ValidationError("reward cache " + path.string() + " is not valid JSON: " + e.what());
  }
  if (!doc.is_array()) throw ValidationError("reward cache must be a JSON array");
  for (const auto& entry : doc) {
    try {
      insert(RewardCacheKey{parse_kind(entry.at("kind").get<std::string>()),
                            entry.at("pred").get<std::string>(), entry.at("gt").get<std::string>(),
                            entry.at("model").get<std::string>()},
             entry.at("score").get<double>());
    } catch (const json::exception& e) {
      throw ValidationError("malformed reward cache entry: " + std::string(e.what()));
    }
  }
}

void RewardCache::save(const std::filesystem::path& path) const {
  json doc = json::array();
  std::vector<std::pair<RewardCacheKey, std::shared_future<double>>> snapshot;
  {
    std::lock_guard lock(mutex_);
    snapshot.assign(entries_.begin(), entries_.end());
  }
  for (const auto& [key, future] : snapshot) {
    if (future.wait_for(std::chrono::seconds(0)) != std::future_status::ready) continue;
    double score = 0.0;
    try {
      score = future.get();
    } catch (...) {
      continue;
    }
    doc.push_back({{"kind", kind_name(key.kind)},
                   {"pred", key.pred},
                   {"gt", key.gt},
                   {"model", key.model_id},
                   {"score", score}});
  }
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write reward cache " + path.string());
  out << doc.dump(1) << '\n';
}

// ---------------------------------------------------------------------------

JudgeReward::JudgeReward(JudgeConfig cfg, std::shared_ptr<ChatService> service,
                         std::shared_ptr<RewardCache> cache)
    : cfg_(std::move(cfg)), service_(std::move(service)), cache_(std::move(cache)) {
  cfg_.validate();
}

double JudgeReward::operator()(const ParsedResponse& resp, const GroundTruth& gt) const {
  if (!resp.answer) return 0.0;
  RewardCacheKey key{ModelRewardKind::kMllm, normalize_label(*resp.answer).text(),
                     normalize_label(gt.label).text(), cfg_.model_id};
  if (key.pred.empty()) return 0.0;
  auto compute = [&]() -> double {
    if (!service_) {
      throw ScoringError("no judge service configured for model " + cfg_.model_id);
    }
    const std::string prompt = render_judge_prompt(key.pred, key.gt, cfg_);
    const std::string reply =
        service_->complete(ChatRequest{cfg_.model_id, prompt, cfg_.temperature, cfg_.max_tokens});
    return parse_judge_score(reply, cfg_);
  };
  return cache_ ? cache_->get_or_compute(key, compute) : compute();
}

double mllm_accuracy_reward(const ParsedResponse& resp, const GroundTruth& gt,
                            const JudgeConfig& cfg, ChatService& service) {
  // Non-owning alias: the reward lives only for this call.
  std::shared_ptr<ChatService> alias(std::shared_ptr<ChatService>{}, &service);
  return JudgeReward(cfg, alias, nullptr)(resp, gt);
}

double embedding_similarity_reward(const ParsedResponse& resp, const GroundTruth& gt,
                                   const EmbedFn& embed) {
  if (!resp.answer) return 0.0;
  const NormalizedLabel pred = normalize_label(*resp.answer);
  if (pred.empty()) return 0.0;
  const NormalizedLabel label = normalize_label(gt.label);
  return std::max(0.0, cosine_similarity(embed(pred.text()), embed(label.text())));
}

EmbeddingReward::EmbeddingReward(EmbeddingConfig cfg, std::shared_ptr<EmbeddingService> service,
                                 std::shared_ptr<RewardCache> cache)
    : cfg_(std::move(cfg)), service_(std::move(service)), cache_(std::move(cache)) {
  cfg_.validate();
}

double EmbeddingReward::operator()(const ParsedResponse& resp, const GroundTruth& gt) const {
  if (!resp.answer) return 0.0;
  std::string pred = normalize_label(*resp.answer).text();
  std::string label = normalize_label(gt.label).text();
  if (pred.empty()) return 0.0;
  // Cosine is symmetric, so both orderings share one cache entry.
  if (label < pred) std::swap(pred, label);
  RewardCacheKey key{ModelRewardKind::kEmb, pred, label, cfg_.model_id};
  auto compute = [&]() -> double {
    if (!service_) {
      throw ScoringError("no embedding service configured for model " + cfg_.model_id);
    }
    const auto vectors = service_->embed(cfg_.model_id, {key.pred, key.gt});
    if (vectors.size() != 2) {
      throw ScoringError("embedding service returned " + std::to_string(vectors.size()) +
                         " vectors for 2 inputs");
    }
    return clamp_unit(cosine_similarity(vectors[0], vectors[1]));
  };
  return cache_ ? cache_->get_or_compute(key, compute) : compute();
}

}  // namespace rewardkit
