#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qrt/toy_policy.hpp"

namespace qrt {

enum class GroupWeightMode {
  uniform,          // w_g = 1
  variance_scaled,  // w_g = sigma_g / (sigma_g + delta)
};

/// Granularity of the importance ratio in the surrogate.
enum class RatioLevel {
  sequence,  // r = pi(q'|q) / pi_old(q'|q), one ratio per rewrite
  token,     // one ratio per appended term, advantage broadcast to each
};

struct GrpoConfig {
  std::size_t group_size = 16;
  double clip_epsilon = 0.2;
  double kl_beta = 0.008;
  double delta = 1e-4;
  double learning_rate = 0.1;
  GroupWeightMode group_weight_mode = GroupWeightMode::uniform;
  RatioLevel ratio_level = RatioLevel::sequence;
  /// Groups per optimization step; every training sample is visited once
  /// per iteration.
  std::size_t groups_per_step = 1;
  /// Optimization passes over each rollout batch (logp_old fixed).
  std::size_t inner_epochs = 1;
  std::uint64_t seed = 0;

  /// Throws UsageError on any violated constraint.
  void validate() const;
};

/// Log-ratio magnitude above which exp() is clamped.
inline constexpr double kMaxLogRatio = 30.0;

/// (R_i - mean) / (population std + delta), times w_g in variance-scaled mode.
/// Throws std::invalid_argument when fewer than 2 rewards are given.
std::vector<double> normalize_advantages(std::span<const double> rewards, double delta,
                                         GroupWeightMode mode = GroupWeightMode::uniform);

struct ImportanceRatio {
  double value;
  bool clamped;
};

/// exp(logp_new - logp_old) with the exponent clamped to ±kMaxLogRatio.
ImportanceRatio importance_ratio(double logp_new, double logp_old);

/// min(ratio * advantage, clip(ratio, 1 - eps, 1 + eps) * advantage).
double clipped_surrogate(double ratio, double advantage, double epsilon);

/// k3 estimator exp(logp_ref - logp_new) - (logp_ref - logp_new) - 1 >= 0.
double kl_penalty(double logp_new, double logp_ref);

struct GroupRollout {
  std::string sample_id;
  std::string query;
  std::vector<std::string> rewrites;
  std::vector<std::vector<std::size_t>> actions;
  std::vector<double> logp_old;
  std::vector<std::vector<double>> token_logp_old;
  std::vector<double> logp_ref;
  std::vector<std::vector<double>> token_logp_ref;
  std::vector<double> rewards;
  std::vector<double> advantages;

  std::size_t size() const noexcept { return rewrites.size(); }
};

/// Draws `group_size` i.i.d. expansions and records their behavior
/// log-probabilities. Deterministic in `seed`. Rewards, advantages and
/// reference log-probabilities are left empty.
GroupRollout sample_group(const ToyExpansionPolicy& policy, const std::string& query,
                          std::size_t group_size, std::uint64_t seed);

/// Fills logp_ref / token_logp_ref from the frozen reference policy.
void attach_reference(GroupRollout& rollout, const ToyExpansionPolicy& reference);

struct LossResult {
  double loss = 0.0;
  /// dloss/dlogits, same layout as ToyExpansionPolicy::logits().
  std::vector<double> gradient;
  double mean_kl = 0.0;
  double clip_fraction = 0.0;
  std::size_t ratio_clamps = 0;
  std::size_t units = 0;  // sequences or tokens averaged over
};

/// GRPO loss of `policy` on scored rollouts and its analytic gradient:
///   -mean_u min(r_u A_u, clip(r_u) A_u) + beta * mean_u k3(u)
/// where u ranges over sequences or tokens per config.ratio_level.
/// Throws std::invalid_argument on an empty batch or missing fields.
LossResult grpo_loss(const ToyExpansionPolicy& policy, std::span<const GroupRollout> rollouts,
                     const GrpoConfig& config);

struct StepStats {
  double loss = 0.0;
  double mean_kl = 0.0;
  double clip_fraction = 0.0;
  std::size_t ratio_clamps = 0;
};

/// One gradient-descent update of the logits.
StepStats grpo_step(ToyExpansionPolicy& policy, std::span<const GroupRollout> rollouts,
                    const GrpoConfig& config);

}  // namespace qrt
