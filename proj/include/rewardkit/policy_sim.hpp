#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rewardkit/advantage.hpp"
#include "rewardkit/ensemble.hpp"

namespace rewardkit {

// Toy GRPO over a categorical policy on a fixed set of canned responses. One
// sampled "response" is one action, so the probability ratio is per response.

struct ResponseTemplate {
  int id = 0;
  std::string think_text;
  std::string answer_text;

  std::string render() const;
};

class SoftmaxPolicy {
 public:
  // Reference and old snapshots are taken from the initial logits.
  explicit SoftmaxPolicy(std::vector<double> logits);

  std::size_t size() const noexcept { return logits_.size(); }
  const std::vector<double>& logits() const noexcept { return logits_; }
  std::vector<double> probs() const;
  const std::vector<double>& old_probs() const noexcept { return old_probs_; }
  const std::vector<double>& ref_probs() const noexcept { return ref_probs_; }

  void set_logits(std::vector<double> logits);
  void snapshot_old() { old_probs_ = probs(); }

 private:
  std::vector<double> logits_;
  std::vector<double> old_probs_;
  std::vector<double> ref_probs_;
};

// Numerically stable softmax.
std::vector<double> softmax(std::span<const double> logits);

struct GrpoConfig {
  // Pass as clip_epsilon to disable clipping.
  static constexpr double kNoClip = std::numeric_limits<double>::infinity();

  std::size_t group_size = 8;
  double clip_epsilon = 0.2;
  double kl_beta = 0.04;
  double learning_rate = 0.5;
  std::size_t steps = 200;
  std::uint64_t seed = 0;
  Strategy strategy = Strategy::kMrn;
  NormalizationConfig normalization;

  void validate() const;
};

// Sequential uniform draws from a seeded mt19937_64. The mapping to [0, 1)
// uses the top 53 bits, so sequences are identical across standard libraries.
class DrawStream {
 public:
  explicit DrawStream(std::uint64_t seed) : engine_(seed) {}
  double next_uniform();
  std::uint64_t draws() const noexcept { return draws_; }

 private:
  std::mt19937_64 engine_;
  std::uint64_t draws_ = 0;
};

// Inverse-CDF draw; skips zero-probability entries.
std::size_t sample_categorical(std::span<const double> probs, double u);

struct SampledGroup {
  std::vector<std::size_t> ids;
  std::vector<std::string> completions;
};

// G draws from the policy's old snapshot.
SampledGroup sample_group(const SoftmaxPolicy& policy, const std::vector<ResponseTemplate>& templates,
                          const GrpoConfig& cfg, DrawStream& draws);

struct ObjectiveInputs {
  std::span<const double> logits;
  std::span<const double> old_probs;
  std::span<const double> ref_probs;
  std::span<const std::size_t> ids;
  std::span<const double> advantages;
  double clip_epsilon = 0.2;
  double kl_beta = 0.04;
};

struct ObjectiveTerms {
  double surrogate = 0.0;  // (1/G) sum_i min(rho_i A_i, clip(rho_i) A_i)
  double kl = 0.0;         // KL(pi || pi_ref), exact categorical
  double objective = 0.0;  // surrogate - beta * kl
  double mean_ratio = 0.0;
  double clip_fraction = 0.0;
};

ObjectiveTerms grpo_objective(const ObjectiveInputs& in);

// Analytic gradient of the objective w.r.t. the logits. The min/clip acts as a
// branch selector; ties take the unclipped branch.
std::vector<double> grpo_gradient(const ObjectiveInputs& in);

struct StepMetrics {
  double surrogate = 0.0;
  double kl = 0.0;
  double mean_ratio = 0.0;
  double clip_fraction = 0.0;
  double grad_norm = 0.0;
};

class NonFiniteGradient : public std::runtime_error {
 public:
  NonFiniteGradient(const std::string& what, std::string state_dump)
      : std::runtime_error(what), state_dump_(std::move(state_dump)) {}
  const std::string& state_dump() const noexcept { return state_dump_; }

 private:
  std::string state_dump_;
};

// One gradient-ascent step on the clipped surrogate minus the KL penalty.
StepMetrics grpo_step(SoftmaxPolicy& policy, const SampledGroup& group,
                      const AdvantageVector& advantages, const GrpoConfig& cfg);

struct SimulationEnv {
  std::vector<ResponseTemplate> templates;
  GroundTruth ground_truth{"answer"};
  RewardRegistry registry;
  // Empty means all zeros (uniform policy).
  std::vector<double> initial_logits;
  // Width in steps of the completion-length running mean; 0 = cumulative.
  std::size_t running_window = 0;

  void validate() const;
};

struct TraceRow {
  std::size_t step = 0;
  std::vector<double> component_mean;
  std::vector<double> component_std;
  double aggregate_mean = 0.0;
  double aggregate_std = 0.0;
  double avg_completion_chars = 0.0;  // running mean over sampled completions
  double expected_completion_chars = 0.0;  // exact, under the post-step policy
  std::vector<double> expected_component_mean;  // exact, under the post-step policy
  double avg_think_chars = 0.0;
  double avg_think_words = 0.0;
  double advantage_std = 0.0;
  StepMetrics metrics;
  std::vector<double> probs;  // after the step
};

struct TrainingTrace {
  std::vector<std::string> components;
  std::size_t num_templates = 0;
  Strategy strategy = Strategy::kMrn;
  // Row 0 is the initial policy: its reward and length columns are exact
  // expectations under that policy. Rows 1..steps come from sampled groups.
  std::vector<TraceRow> rows;
  std::vector<double> final_logits;
};

// sample -> score -> normalize -> step, cfg.steps times. Deterministic in cfg.seed.
TrainingTrace run_training(const SimulationEnv& env, const GrpoConfig& cfg);

}  // namespace rewardkit
