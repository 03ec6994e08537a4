#include "rewardkit/config.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <type_traits>

#include <toml.hpp>

#include "rewardkit/errors.hpp"
#include "rewardkit/http_service.hpp"

namespace rewardkit {

namespace {

void reject_unknown_keys(const toml::table& tbl, const std::set<std::string_view>& known,
                         std::string_view where) {
  for (const auto& [key, node] : tbl) {
    if (!known.contains(key.str())) {
      throw ConfigError("unknown key '" + std::string(key.str()) + "' in " + std::string(where));
    }
  }
}

template <typename T>
std::optional<T> get(const toml::table& tbl, std::string_view key, std::string_view where) {
  const toml::node* node = tbl.get(key);
  if (!node) return std::nullopt;
  bool type_ok = false;
  if constexpr (std::is_same_v<T, bool>) type_ok = node->is_boolean();
  else if constexpr (std::is_same_v<T, std::string>) type_ok = node->is_string();
  else if constexpr (std::is_integral_v<T>) type_ok = node->is_integer();
  else type_ok = node->is_number();
  auto value = type_ok ? node->value<T>() : std::nullopt;
  if (!value) {
    throw ConfigError("'" + std::string(key) + "' in " + std::string(where) + " has the wrong type");
  }
  return value;
}

std::size_t get_count(const toml::table& tbl, std::string_view key, std::string_view where,
                      std::size_t fallback) {
  const auto v = get<std::int64_t>(tbl, key, where);
  if (!v) return fallback;
  if (*v < 0) throw ConfigError("'" + std::string(key) + "' in " + std::string(where) + " must be >= 0");
  return static_cast<std::size_t>(*v);
}

const toml::table* subtable(const toml::table& tbl, std::string_view key) {
  const toml::node* node = tbl.get(key);
  if (!node) return nullptr;
  if (!node->is_table()) throw ConfigError("'" + std::string(key) + "' must be a table");
  return node->as_table();
}

std::vector<double> get_reals(const toml::table& tbl, std::string_view key, std::string_view where) {
  std::vector<double> out;
  const toml::node* node = tbl.get(key);
  if (!node) return out;
  const toml::array* arr = node->as_array();
  if (!arr) throw ConfigError("'" + std::string(key) + "' in " + std::string(where) + " must be an array");
  for (const auto& item : *arr) {
    auto v = item.value<double>();
    if (!v) throw ConfigError("'" + std::string(key) + "' in " + std::string(where) + " must hold numbers");
    out.push_back(*v);
  }
  return out;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RetryPolicy parse_retry(const toml::table& tbl, std::string_view where) {
  RetryPolicy r;
  if (auto v = get<std::int64_t>(tbl, "max_retries", where)) r.max_retries = static_cast<int>(*v);
  if (auto v = get<std::int64_t>(tbl, "backoff_ms", where)) r.initial_backoff = std::chrono::milliseconds(*v);
  return r;
}

JudgeConfig parse_judge(const toml::table& tbl) {
  constexpr std::string_view where = "[judge]";
  reject_unknown_keys(tbl,
                      {"endpoint", "model", "api_key_env", "timeout_ms", "max_retries", "backoff_ms",
                       "on_unparseable", "template_file", "parallelism", "score_min", "score_max",
                       "max_tokens"},
                      where);
  JudgeConfig j;
  j.endpoint = get<std::string>(tbl, "endpoint", where).value_or("");
  j.model_id = get<std::string>(tbl, "model", where).value_or("");
  j.api_key_env = get<std::string>(tbl, "api_key_env", where).value_or("REWARDKIT_JUDGE_API_KEY");
  if (auto v = get<std::int64_t>(tbl, "timeout_ms", where)) j.timeout = std::chrono::milliseconds(*v);
  j.retry = parse_retry(tbl, where);
  if (auto v = get<std::string>(tbl, "on_unparseable", where)) j.on_unparseable = parse_on_unparseable(*v);
  if (auto v = get<std::string>(tbl, "template_file", where)) j.prompt_template = read_text_file(*v);
  j.parallelism = get_count(tbl, "parallelism", where, j.parallelism);
  if (auto v = get<std::int64_t>(tbl, "score_min", where)) j.score_min = static_cast<int>(*v);
  if (auto v = get<std::int64_t>(tbl, "score_max", where)) j.score_max = static_cast<int>(*v);
  if (auto v = get<std::int64_t>(tbl, "max_tokens", where)) j.max_tokens = static_cast<int>(*v);
  return j;
}

EmbeddingConfig parse_embedding(const toml::table& tbl) {
  constexpr std::string_view where = "[embedding]";
  reject_unknown_keys(tbl,
                      {"endpoint", "model", "api_key_env", "timeout_ms", "max_retries", "backoff_ms",
                       "parallelism"},
                      where);
  EmbeddingConfig e;
  e.endpoint = get<std::string>(tbl, "endpoint", where).value_or("");
  e.model_id = get<std::string>(tbl, "model", where).value_or("");
  e.api_key_env = get<std::string>(tbl, "api_key_env", where).value_or("REWARDKIT_EMBEDDING_API_KEY");
  if (auto v = get<std::int64_t>(tbl, "timeout_ms", where)) e.timeout = std::chrono::milliseconds(*v);
  e.retry = parse_retry(tbl, where);
  e.parallelism = get_count(tbl, "parallelism", where, e.parallelism);
  return e;
}

RewardSpec parse_reward(const toml::table& tbl, std::size_t index) {
  const std::string where = "[[rewards]] #" + std::to_string(index);
  reject_unknown_keys(tbl, {"name", "kind", "scale", "match", "require_format"}, where);
  RewardSpec r;
  r.kind = get<std::string>(tbl, "kind", where).value_or("");
  r.name = get<std::string>(tbl, "name", where).value_or(r.kind);
  if (r.kind.empty()) r.kind = r.name;
  if (auto v = get<double>(tbl, "scale", where)) r.scale = *v;
  if (auto v = get<std::string>(tbl, "match", where)) r.match = parse_match_mode(*v);
  if (auto v = get<bool>(tbl, "require_format", where)) {
    r.gate = *v ? LengthGate::kRequireFormat : LengthGate::kThinkOnly;
  }
  return r;
}

SimulationSettings parse_simulation(const toml::table& tbl) {
  constexpr std::string_view where = "[simulation]";
  reject_unknown_keys(tbl,
                      {"steps", "group_size", "clip_epsilon", "kl_beta", "learning_rate",
                       "ground_truth", "dataset", "running_window", "templates"},
                      where);
  SimulationSettings s;
  s.steps = get_count(tbl, "steps", where, s.steps);
  s.group_size = get_count(tbl, "group_size", where, s.group_size);
  if (auto v = get<double>(tbl, "clip_epsilon", where)) s.clip_epsilon = *v;
  if (auto v = get<double>(tbl, "kl_beta", where)) s.kl_beta = *v;
  if (auto v = get<double>(tbl, "learning_rate", where)) s.learning_rate = *v;
  if (auto v = get<std::string>(tbl, "ground_truth", where)) s.ground_truth = *v;
  if (auto v = get<std::string>(tbl, "dataset", where)) s.dataset = *v;
  s.running_window = get_count(tbl, "running_window", where, s.running_window);
  if (const toml::node* node = tbl.get("templates")) {
    const toml::array* arr = node->as_array();
    if (!arr) throw ConfigError("[[simulation.templates]] must be an array of tables");
    bool any_logit = false;
    std::vector<double> logits;
    for (std::size_t i = 0; i < arr->size(); ++i) {
      const toml::table* t = (*arr)[i].as_table();
      const std::string twhere = "[[simulation.templates]] #" + std::to_string(i);
      if (!t) throw ConfigError(twhere + " must be a table");
      reject_unknown_keys(*t, {"think", "answer", "initial_logit"}, twhere);
      ResponseTemplate rt;
      rt.id = static_cast<int>(i);
      rt.think_text = get<std::string>(*t, "think", twhere).value_or("");
      rt.answer_text = get<std::string>(*t, "answer", twhere).value_or("");
      s.templates.push_back(std::move(rt));
      const auto logit = get<double>(*t, "initial_logit", twhere);
      any_logit = any_logit || logit.has_value();
      logits.push_back(logit.value_or(0.0));
    }
    if (any_logit) s.initial_logits = std::move(logits);
  }
  return s;
}

void override_from_env(std::string& target, const char* var) {
  if (const char* value = std::getenv(var); value && *value) target = value;
}

}  // namespace

RunConfig RunConfig::parse(std::string_view toml_text, bool apply_env_overrides) {
  toml::table root;
  try {
    root = toml::parse(toml_text);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << "invalid TOML: " << e.description() << " at line " << e.source().begin.line;
    throw ConfigError(os.str());
  }
  constexpr std::string_view where = "config";
  reject_unknown_keys(root,
                      {"seed", "strategy", "output_dir", "parallelism", "max_malformed_fraction",
                       "bounds", "normalization", "rewards", "judge", "embedding", "cache",
                       "simulation"},
                      where);
  RunConfig cfg;
  if (auto v = get<std::int64_t>(root, "seed", where)) cfg.seed = static_cast<std::uint64_t>(*v);
  if (auto v = get<std::string>(root, "strategy", where)) cfg.strategy = parse_strategy(*v);
  if (auto v = get<std::string>(root, "output_dir", where)) cfg.output_dir = *v;
  cfg.parallelism = get_count(root, "parallelism", where, cfg.parallelism);
  if (auto v = get<double>(root, "max_malformed_fraction", where)) cfg.max_malformed_fraction = *v;

  if (const auto* b = subtable(root, "bounds")) {
    reject_unknown_keys(*b, {"l_min", "l_max"}, "[bounds]");
    cfg.bounds = LengthBounds(get_count(*b, "l_min", "[bounds]", kDefaultLengthMin),
                              get_count(*b, "l_max", "[bounds]", kDefaultLengthMax));
  }
  if (const auto* n = subtable(root, "normalization")) {
    reject_unknown_keys(*n, {"epsilon", "weights"}, "[normalization]");
    if (auto v = get<double>(*n, "epsilon", "[normalization]")) cfg.normalization.epsilon = *v;
    cfg.normalization.weights = get_reals(*n, "weights", "[normalization]");
  }
  if (const toml::node* node = root.get("rewards")) {
    const toml::array* arr = node->as_array();
    if (!arr) throw ConfigError("[[rewards]] must be an array of tables");
    for (std::size_t i = 0; i < arr->size(); ++i) {
      const toml::table* t = (*arr)[i].as_table();
      if (!t) throw ConfigError("[[rewards]] entries must be tables");
      cfg.rewards.push_back(parse_reward(*t, i));
    }
  } else {
    cfg.rewards = {{"format", "format"}, {"cls", "cls"}, {"len", "len"}};
  }
  if (const auto* j = subtable(root, "judge")) cfg.judge = parse_judge(*j);
  if (const auto* e = subtable(root, "embedding")) cfg.embedding = parse_embedding(*e);
  if (const auto* c = subtable(root, "cache")) {
    reject_unknown_keys(*c, {"path", "read_only"}, "[cache]");
    if (auto v = get<std::string>(*c, "path", "[cache]")) cfg.cache.path = *v;
    cfg.cache.read_only = get<bool>(*c, "read_only", "[cache]").value_or(false);
  }
  if (const auto* s = subtable(root, "simulation")) cfg.simulation = parse_simulation(*s);

  if (apply_env_overrides) {
    if (cfg.judge) override_from_env(cfg.judge->endpoint, "REWARDKIT_JUDGE_ENDPOINT");
    if (cfg.embedding) override_from_env(cfg.embedding->endpoint, "REWARDKIT_EMBEDDING_ENDPOINT");
  }
  cfg.validate();
  return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path, bool apply_env_overrides) {
  return parse(read_text_file(path), apply_env_overrides);
}

bool RunConfig::uses_model_rewards() const {
  for (const auto& r : rewards) {
    if (r.kind == "mllm" || r.kind == "emb") return true;
  }
  return false;
}

void RunConfig::validate() const {
  if (rewards.empty()) throw ConfigError("at least one reward must be enabled");
  std::set<std::string> names;
  for (const auto& r : rewards) {
    static const std::set<std::string> kinds = {"format", "cls", "len", "mllm", "emb"};
    if (!kinds.contains(r.kind)) {
      throw ConfigError("unknown reward kind '" + r.kind + "' (expected format, cls, len, mllm or emb)");
    }
    if (!names.insert(r.name).second) throw ConfigError("duplicate reward name '" + r.name + "'");
    if (!std::isfinite(r.scale)) throw ConfigError("reward scale must be finite");
    if (r.kind == "mllm") {
      if (!judge) throw ConfigError("reward '" + r.name + "' needs a [judge] section");
      if (!cache.read_only && judge->endpoint.empty()) throw ConfigError("[judge] endpoint is required");
      if (judge->model_id.empty()) throw ConfigError("[judge] model is required");
    }
    if (r.kind == "emb") {
      if (!embedding) throw ConfigError("reward '" + r.name + "' needs an [embedding] section");
      if (!cache.read_only && embedding->endpoint.empty()) {
        throw ConfigError("[embedding] endpoint is required");
      }
      if (embedding->model_id.empty()) throw ConfigError("[embedding] model is required");
    }
  }
  normalization.validate(rewards.size());
  if (parallelism == 0) throw ConfigError("parallelism must be >= 1");
  if (!(max_malformed_fraction >= 0.0 && max_malformed_fraction <= 1.0)) {
    throw ConfigError("max_malformed_fraction must lie in [0, 1]");
  }
  if (judge) judge->validate();
  if (embedding) embedding->validate();
}

ModelServices make_model_services(const RunConfig& cfg) {
  ModelServices services;
  services.cache = std::make_shared<RewardCache>(cfg.cache.read_only);
  if (cfg.cache.path && std::filesystem::exists(*cfg.cache.path)) services.cache->load(*cfg.cache.path);
  if (cfg.cache.read_only) return services;
  for (const auto& r : cfg.rewards) {
    if (r.kind == "mllm" && !services.chat) {
      services.chat = std::make_shared<HttpChatService>(*cfg.judge);
    }
    if (r.kind == "emb" && !services.embeddings) {
      services.embeddings = std::make_shared<HttpEmbeddingService>(*cfg.embedding);
    }
  }
  return services;
}

RewardRegistry build_registry(const RunConfig& cfg, const ModelServices& services) {
  RewardRegistry reg;
  for (const auto& r : cfg.rewards) {
    if (r.kind == "format") {
      reg.add(make_format_reward(r.name, r.scale));
    } else if (r.kind == "cls") {
      reg.add(make_classification_reward(r.match, r.name, r.scale));
    } else if (r.kind == "len") {
      reg.add(make_length_reward(cfg.bounds, r.gate, r.name, r.scale));
    } else if (r.kind == "mllm") {
      reg.add(make_judge_reward(
          std::make_shared<const JudgeReward>(*cfg.judge, services.chat, services.cache), r.name,
          r.scale));
    } else if (r.kind == "emb") {
      reg.add(make_embedding_reward(
          std::make_shared<const EmbeddingReward>(*cfg.embedding, services.embeddings, services.cache),
          r.name, r.scale));
    }
  }
  return reg;
}

GrpoConfig make_grpo_config(const RunConfig& cfg) {
  GrpoConfig g;
  g.group_size = cfg.simulation.group_size;
  g.clip_epsilon = cfg.simulation.clip_epsilon;
  g.kl_beta = cfg.simulation.kl_beta;
  g.learning_rate = cfg.simulation.learning_rate;
  g.steps = cfg.simulation.steps;
  g.seed = cfg.seed;
  g.strategy = cfg.strategy;
  g.normalization = cfg.normalization;
  g.validate();
  return g;
}

SimulationEnv make_simulation_env(const RunConfig& cfg, const ModelServices& services) {
  SimulationEnv env;
  env.templates = cfg.simulation.templates;
  env.ground_truth = GroundTruth(cfg.simulation.ground_truth, cfg.simulation.dataset);
  env.registry = build_registry(cfg, services);
  env.initial_logits = cfg.simulation.initial_logits;
  env.running_window = cfg.simulation.running_window;
  env.validate();
  return env;
}

}  // namespace rewardkit
