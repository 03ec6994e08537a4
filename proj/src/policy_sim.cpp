#include "rewardkit/policy_sim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>

#include "rewardkit/errors.hpp"
#include "rewardkit/response.hpp"

namespace rewardkit {

std::string ResponseTemplate::render() const {
  return render_tagged_response(think_text, answer_text);
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> p(logits.size());
  if (logits.empty()) return p;
  const double peak = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (std::size_t j = 0; j < logits.size(); ++j) {
    p[j] = std::exp(logits[j] - peak);
    total += p[j];
  }
  for (double& x : p) x /= total;
  return p;
}

SoftmaxPolicy::SoftmaxPolicy(std::vector<double> logits) : logits_(std::move(logits)) {
  if (logits_.empty()) throw ConfigError("policy needs at least one template");
  for (double x : logits_) {
    if (!std::isfinite(x)) throw ConfigError("policy logits must be finite");
  }
  ref_probs_ = probs();
  old_probs_ = ref_probs_;
}

std::vector<double> SoftmaxPolicy::probs() const { return softmax(logits_); }

void SoftmaxPolicy::set_logits(std::vector<double> logits) {
  if (logits.size() != logits_.size()) throw ConfigError("logit dimension cannot change");
  logits_ = std::move(logits);
}

void GrpoConfig::validate() const {
  if (group_size < 2) throw ConfigError("group_size must be at least 2");
  const bool clip_ok = clip_epsilon == kNoClip || (clip_epsilon > 0.0 && clip_epsilon < 1.0);
  if (!clip_ok) throw ConfigError("clip_epsilon must lie in (0, 1)");
  if (!(kl_beta >= 0.0) || !std::isfinite(kl_beta)) throw ConfigError("kl_beta must be >= 0");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning_rate must be positive");
  }
}

double DrawStream::next_uniform() {
  ++draws_;
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::size_t sample_categorical(std::span<const double> probs, double u) {
  double cumulative = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t j = 0; j < probs.size(); ++j) {
    if (probs[j] <= 0.0) continue;
    last_positive = j;
    cumulative += probs[j];
    if (u < cumulative) return j;
  }
  return last_positive;
}

SampledGroup sample_group(const SoftmaxPolicy& policy, const std::vector<ResponseTemplate>& templates,
                          const GrpoConfig& cfg, DrawStream& draws) {
  if (templates.size() != policy.size()) {
    throw ConfigError("policy has " + std::to_string(policy.size()) + " logits for " +
                      std::to_string(templates.size()) + " templates");
  }
  SampledGroup group;
  group.ids.reserve(cfg.group_size);
  group.completions.reserve(cfg.group_size);
  for (std::size_t i = 0; i < cfg.group_size; ++i) {
    const std::size_t id = sample_categorical(policy.old_probs(), draws.next_uniform());
    group.ids.push_back(id);
    group.completions.push_back(templates[id].render());
  }
  return group;
}

namespace {

double kl_divergence(std::span<const double> p, std::span<const double> ref) {
  double kl = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (p[j] > 0.0) kl += p[j] * std::log(p[j] / ref[j]);
  }
  return kl;
}

void check_inputs(const ObjectiveInputs& in) {
  const std::size_t n = in.logits.size();
  if (in.old_probs.size() != n || in.ref_probs.size() != n) {
    throw ConfigError("objective inputs have inconsistent dimensions");
  }
  if (in.ids.size() != in.advantages.size() || in.ids.empty()) {
    throw ConfigError("objective needs one advantage per sampled response");
  }
  for (std::size_t id : in.ids) {
    if (id >= n) throw ConfigError("sampled response id out of range");
  }
}

struct BranchChoice {
  double ratio;
  double value;
  bool clipped;
};

BranchChoice choose_branch(double ratio, double advantage, double clip_epsilon) {
  const double unclipped = ratio * advantage;
  const double bounded = std::clamp(ratio, 1.0 - clip_epsilon, 1.0 + clip_epsilon);
  const double clipped = bounded * advantage;
  // Inside the band both branches coincide; a NaN advantage stays unclipped so it surfaces.
  if (bounded != ratio && clipped < unclipped) return {ratio, clipped, true};
  return {ratio, unclipped, false};
}

}  // namespace

ObjectiveTerms grpo_objective(const ObjectiveInputs& in) {
  check_inputs(in);
  const auto p = softmax(in.logits);
  const double g = static_cast<double>(in.ids.size());
  ObjectiveTerms t;
  std::size_t clipped = 0;
  for (std::size_t i = 0; i < in.ids.size(); ++i) {
    const std::size_t o = in.ids[i];
    const auto branch = choose_branch(p[o] / in.old_probs[o], in.advantages[i], in.clip_epsilon);
    t.surrogate += branch.value;
    t.mean_ratio += branch.ratio;
    clipped += branch.clipped ? 1 : 0;
  }
  t.surrogate /= g;
  t.mean_ratio /= g;
  t.clip_fraction = static_cast<double>(clipped) / g;
  t.kl = kl_divergence(p, in.ref_probs);
  t.objective = t.surrogate - in.kl_beta * t.kl;
  return t;
}

std::vector<double> grpo_gradient(const ObjectiveInputs& in) {
  check_inputs(in);
  const std::size_t n = in.logits.size();
  const auto p = softmax(in.logits);
  const double g = static_cast<double>(in.ids.size());
  std::vector<double> grad(n, 0.0);
  // d rho_o / d theta_j = rho_o (1[j == o] - p_j)
  for (std::size_t i = 0; i < in.ids.size(); ++i) {
    const std::size_t o = in.ids[i];
    const double ratio = p[o] / in.old_probs[o];
    const auto branch = choose_branch(ratio, in.advantages[i], in.clip_epsilon);
    if (branch.clipped) continue;
    const double coef = in.advantages[i] * ratio / g;
    for (std::size_t j = 0; j < n; ++j) grad[j] -= coef * p[j];
    grad[o] += coef;
  }
  if (in.kl_beta != 0.0) {
    // d KL / d theta_k = p_k (log(p_k / ref_k) - KL)
    const double kl = kl_divergence(p, in.ref_probs);
    for (std::size_t k = 0; k < n; ++k) {
      if (p[k] <= 0.0) continue;
      grad[k] -= in.kl_beta * p[k] * (std::log(p[k] / in.ref_probs[k]) - kl);
    }
  }
  return grad;
}

namespace {

std::string dump_state(const SoftmaxPolicy& policy, const SampledGroup& group,
                       const AdvantageVector& adv, std::span<const double> grad) {
  std::ostringstream os;
  os.precision(17);
  auto list = [&os](const char* name, auto&& xs) {
    os << name << ": [";
    bool first = true;
    for (const auto& x : xs) {
      os << (first ? "" : ", ") << x;
      first = false;
    }
    os << "]\n";
  };
  list("logits", policy.logits());
  list("probs", policy.probs());
  list("old_probs", policy.old_probs());
  list("ref_probs", policy.ref_probs());
  list("ids", group.ids);
  list("advantages", adv.values);
  list("gradient", grad);
  return os.str();
}

}  // namespace

StepMetrics grpo_step(SoftmaxPolicy& policy, const SampledGroup& group,
                      const AdvantageVector& advantages, const GrpoConfig& cfg) {
  if (advantages.values.size() != group.ids.size()) {
    throw ConfigError("advantage vector length does not match the sampled group");
  }
  const ObjectiveInputs in{policy.logits(), policy.old_probs(), policy.ref_probs(), group.ids,
                           advantages.values, cfg.clip_epsilon, cfg.kl_beta};
  const auto terms = grpo_objective(in);
  const auto grad = grpo_gradient(in);
  double norm2 = 0.0;
  for (double x : grad) norm2 += x * x;
  if (!std::isfinite(norm2)) {
    throw NonFiniteGradient("non-finite policy gradient", dump_state(policy, group, advantages, grad));
  }
  std::vector<double> logits = policy.logits();
  for (std::size_t j = 0; j < logits.size(); ++j) logits[j] += cfg.learning_rate * grad[j];
  policy.set_logits(std::move(logits));
  return StepMetrics{terms.surrogate, terms.kl, terms.mean_ratio, terms.clip_fraction,
                     std::sqrt(norm2)};
}

void SimulationEnv::validate() const {
  if (templates.size() < 2) throw ConfigError("simulation needs at least two response templates");
  if (registry.empty()) throw ConfigError("simulation needs at least one reward");
  if (!initial_logits.empty() && initial_logits.size() != templates.size()) {
    throw ConfigError("initial_logits must have one entry per template");
  }
  for (const auto& t : templates) {
    if (!parse_tagged_response(t.render()).format_valid) {
      throw ConfigError("template " + std::to_string(t.id) +
                        " does not render to a well-formed response (tags inside its text?)");
    }
  }
}

namespace {

struct TemplateFacts {
  std::vector<std::vector<double>> rewards;  // [template][component]
  std::vector<double> aggregate;
  std::vector<double> completion_chars;
  std::vector<double> think_chars;
  std::vector<double> think_words;
};

TemplateFacts score_templates(const SimulationEnv& env, const NormalizationConfig& norm) {
  std::vector<std::string> rendered;
  for (const auto& t : env.templates) rendered.push_back(t.render());
  const RewardMatrix m = score_group(rendered, env.ground_truth, env.registry);
  norm.validate(m.num_components());
  TemplateFacts facts;
  facts.rewards = m.rows();
  facts.aggregate = aggregate_rewards(m, norm);
  for (std::size_t j = 0; j < rendered.size(); ++j) {
    const auto parsed = parse_tagged_response(rendered[j]);
    facts.completion_chars.push_back(static_cast<double>(utf8_length(rendered[j])));
    facts.think_chars.push_back(static_cast<double>(parsed.think_length));
    facts.think_words.push_back(static_cast<double>(word_count(parsed.think.value_or(""))));
  }
  return facts;
}

double expectation(std::span<const double> p, std::span<const double> xs) {
  double e = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) e += p[j] * xs[j];
  return e;
}

GroupStats weighted_stats(std::span<const double> p, std::span<const double> xs) {
  const double mean = expectation(p, xs);
  double var = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) var += p[j] * (xs[j] - mean) * (xs[j] - mean);
  return {mean, std::sqrt(std::max(0.0, var))};
}

TraceRow initial_row(const TemplateFacts& facts, std::span<const double> p, std::size_t k_count) {
  TraceRow row;
  row.step = 0;
  for (std::size_t k = 0; k < k_count; ++k) {
    std::vector<double> col;
    for (const auto& r : facts.rewards) col.push_back(r[k]);
    const auto s = weighted_stats(p, col);
    row.component_mean.push_back(s.mean);
    row.component_std.push_back(s.std);
  }
  row.expected_component_mean = row.component_mean;
  const auto agg = weighted_stats(p, facts.aggregate);
  row.aggregate_mean = agg.mean;
  row.aggregate_std = agg.std;
  row.avg_completion_chars = expectation(p, facts.completion_chars);
  row.expected_completion_chars = row.avg_completion_chars;
  row.avg_think_chars = expectation(p, facts.think_chars);
  row.avg_think_words = expectation(p, facts.think_words);
  row.probs.assign(p.begin(), p.end());
  return row;
}

}  // namespace

TrainingTrace run_training(const SimulationEnv& env, const GrpoConfig& cfg) {
  env.validate();
  cfg.validate();
  const std::size_t n = env.templates.size();
  SoftmaxPolicy policy(env.initial_logits.empty() ? std::vector<double>(n, 0.0)
                                                  : env.initial_logits);
  const TemplateFacts facts = score_templates(env, cfg.normalization);
  const std::size_t k_count = env.registry.size();

  TrainingTrace trace;
  trace.components = env.registry.names();
  trace.num_templates = n;
  trace.strategy = cfg.strategy;
  trace.rows.push_back(initial_row(facts, policy.probs(), k_count));

  DrawStream draws(cfg.seed);
  std::deque<std::pair<double, double>> window;  // per step: (chars sum, count)
  double window_sum = 0.0;
  double window_count = 0.0;

  for (std::size_t step = 1; step <= cfg.steps; ++step) {
    policy.snapshot_old();
    const SampledGroup group = sample_group(policy, env.templates, cfg, draws);

    std::vector<double> values;
    values.reserve(group.ids.size() * k_count);
    for (std::size_t id : group.ids) {
      values.insert(values.end(), facts.rewards[id].begin(), facts.rewards[id].end());
    }
    const RewardMatrix m(trace.components, group.ids.size(), std::move(values));
    const AdvantageVector adv = normalize(m, cfg.strategy, cfg.normalization);
    const StepMetrics metrics = grpo_step(policy, group, adv, cfg);

    TraceRow row;
    row.step = step;
    for (std::size_t k = 0; k < k_count; ++k) {
      const auto s = group_stats(m.column(k));
      row.component_mean.push_back(s.mean);
      row.component_std.push_back(s.std);
    }
    const auto agg = group_stats(aggregate_rewards(m, cfg.normalization));
    row.aggregate_mean = agg.mean;
    row.aggregate_std = agg.std;
    row.advantage_std = group_stats(adv.values).std;

    double chars = 0.0;
    double think_chars = 0.0;
    double think_words = 0.0;
    for (std::size_t id : group.ids) {
      chars += facts.completion_chars[id];
      think_chars += facts.think_chars[id];
      think_words += facts.think_words[id];
    }
    const double g = static_cast<double>(group.ids.size());
    row.avg_think_chars = think_chars / g;
    row.avg_think_words = think_words / g;
    window.emplace_back(chars, g);
    window_sum += chars;
    window_count += g;
    if (env.running_window > 0 && window.size() > env.running_window) {
      window_sum -= window.front().first;
      window_count -= window.front().second;
      window.pop_front();
    }
    row.avg_completion_chars = window_sum / window_count;

    row.metrics = metrics;
    row.probs = policy.probs();
    row.expected_completion_chars = expectation(row.probs, facts.completion_chars);
    for (std::size_t k = 0; k < k_count; ++k) {
      double e = 0.0;
      for (std::size_t j = 0; j < n; ++j) e += row.probs[j] * facts.rewards[j][k];
      row.expected_component_mean.push_back(e);
    }
    trace.rows.push_back(std::move(row));
  }
  trace.final_logits = policy.logits();
  return trace;
}

}  // namespace rewardkit
