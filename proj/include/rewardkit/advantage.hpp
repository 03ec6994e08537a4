#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rewardkit {

// G x K group of reward scores: one row per sampled completion, one column per
// reward function. Stored row-major.
class RewardMatrix {
 public:
  RewardMatrix(std::vector<std::string> components, std::size_t group_size,
               std::vector<double> values);

  static RewardMatrix from_rows(std::vector<std::string> components,
                                const std::vector<std::vector<double>>& rows);

  std::size_t group_size() const noexcept { return group_size_; }
  std::size_t num_components() const noexcept { return components_.size(); }
  const std::vector<std::string>& components() const noexcept { return components_; }
  const std::vector<double>& values() const noexcept { return values_; }

  double operator()(std::size_t row, std::size_t col) const {
    return values_[row * num_components() + col];
  }
  std::span<const double> row(std::size_t i) const {
    return {values_.data() + i * num_components(), num_components()};
  }
  std::vector<double> column(std::size_t k) const;
  std::vector<std::vector<double>> rows() const;

 private:
  std::vector<std::string> components_;
  std::size_t group_size_;
  std::vector<double> values_;
};

enum class Strategy { kGrpo, kMrn };

Strategy parse_strategy(std::string_view name);
std::string_view to_string(Strategy s);

struct NormalizationConfig {
  // Added to the std in the denominator, never under the square root.
  double epsilon = 1e-4;
  // Per-component aggregation weights; empty means all ones. Not part of the
  // method itself, only an ablation hook.
  std::vector<double> weights;

  void validate(std::size_t num_components) const;
};

struct AdvantageVector {
  std::vector<double> values;
  // G x K row-major per-component advantages (MRN only).
  std::optional<std::vector<double>> per_component;
  Strategy strategy = Strategy::kGrpo;
};

struct GroupStats {
  double mean = 0.0;
  double std = 0.0;  // population (divisor G)
};

// Mean computed as x0 + sum(x - x0)/n so constant inputs reproduce x0 exactly.
GroupStats group_stats(std::span<const double> xs);

// Aggregate each row (weighted sum), then standardize across the group.
AdvantageVector grpo_normalize(const RewardMatrix& m, const NormalizationConfig& cfg = {});

// Standardize each component across the group, then aggregate per row.
AdvantageVector mrn_normalize(const RewardMatrix& m, const NormalizationConfig& cfg = {});

AdvantageVector normalize(const RewardMatrix& m, Strategy strategy,
                          const NormalizationConfig& cfg = {});

// Row aggregates (weighted row sums) of the raw matrix.
std::vector<double> aggregate_rewards(const RewardMatrix& m, const NormalizationConfig& cfg = {});

// Pearson correlation; nullopt when either side has zero variance.
std::optional<double> pearson_correlation(std::span<const double> a, std::span<const double> b);

struct AdvantageDiagnostics {
  std::vector<std::string> components;
  std::vector<GroupStats> component_stats;
  GroupStats aggregate_stats;
  AdvantageVector grpo;
  AdvantageVector mrn;
  // [component] -> correlation of the advantage vector with that component's z-scores.
  std::vector<std::optional<double>> grpo_correlation;
  std::vector<std::optional<double>> mrn_correlation;
};

AdvantageDiagnostics advantage_diagnostics(const RewardMatrix& m,
                                           const NormalizationConfig& cfg = {});

}  // namespace rewardkit
