#include "qrt/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "qrt/error.hpp"
#include "qrt/random.hpp"

namespace qrt {

void GrpoConfig::validate() const {
  if (group_size < 2) throw UsageError("grpo.group_size must be >= 2");
  if (!(clip_epsilon > 0.0 && clip_epsilon < 1.0)) {
    throw UsageError("grpo.clip_epsilon must be in (0, 1)");
  }
  if (!(kl_beta >= 0.0) || !std::isfinite(kl_beta)) throw UsageError("grpo.kl_beta must be >= 0");
  if (!(delta > 0.0)) throw UsageError("grpo.delta must be > 0");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw UsageError("grpo.learning_rate must be > 0");
  }
  if (groups_per_step == 0) throw UsageError("grpo.groups_per_step must be >= 1");
  if (inner_epochs == 0) throw UsageError("grpo.inner_epochs must be >= 1");
}

std::vector<double> normalize_advantages(std::span<const double> rewards, double delta,
                                         GroupWeightMode mode) {
  if (rewards.size() < 2) throw std::invalid_argument("advantage group needs >= 2 rewards");
  const double n = static_cast<double>(rewards.size());
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= n;
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  const double sigma = std::sqrt(var / n);
  const double weight = mode == GroupWeightMode::variance_scaled ? sigma / (sigma + delta) : 1.0;
  std::vector<double> out;
  out.reserve(rewards.size());
  for (double r : rewards) out.push_back(weight * (r - mean) / (sigma + delta));
  return out;
}

ImportanceRatio importance_ratio(double logp_new, double logp_old) {
  const double x = logp_new - logp_old;
  if (x > kMaxLogRatio) return {std::exp(kMaxLogRatio), true};
  if (x < -kMaxLogRatio) return {std::exp(-kMaxLogRatio), true};
  return {std::exp(x), false};
}

double clipped_surrogate(double ratio, double advantage, double epsilon) {
  const double clipped = std::clamp(ratio, 1.0 - epsilon, 1.0 + epsilon);
  return std::min(ratio * advantage, clipped * advantage);
}

double kl_penalty(double logp_new, double logp_ref) {
  const double x = logp_ref - logp_new;
  // expm1 keeps the result exact near zero, where exp(x) - x - 1 cancels.
  return std::expm1(x) - x;
}

GroupRollout sample_group(const ToyExpansionPolicy& policy, const std::string& query,
                          std::size_t group_size, std::uint64_t seed) {
  if (group_size < 2) throw std::invalid_argument("group_size must be >= 2");
  Rng rng(seed);
  GroupRollout out;
  out.query = query;
  out.rewrites.reserve(group_size);
  for (std::size_t i = 0; i < group_size; ++i) {
    auto actions = policy.sample(query, rng);
    auto per_token = policy.token_log_probs(query, actions);
    double total = 0.0;
    for (double lp : per_token) total += lp;
    out.rewrites.push_back(policy.render(query, actions));
    out.logp_old.push_back(total);
    out.token_logp_old.push_back(std::move(per_token));
    out.actions.push_back(std::move(actions));
  }
  return out;
}

void attach_reference(GroupRollout& rollout, const ToyExpansionPolicy& reference) {
  rollout.logp_ref.clear();
  rollout.token_logp_ref.clear();
  for (const auto& actions : rollout.actions) {
    auto per_token = reference.token_log_probs(rollout.query, actions);
    double total = 0.0;
    for (double lp : per_token) total += lp;
    rollout.logp_ref.push_back(total);
    rollout.token_logp_ref.push_back(std::move(per_token));
  }
}

namespace {

void check_rollout(const GroupRollout& r) {
  const auto g = r.actions.size();
  if (g == 0 || r.logp_old.size() != g || r.token_logp_old.size() != g ||
      r.logp_ref.size() != g || r.token_logp_ref.size() != g || r.advantages.size() != g) {
    throw std::invalid_argument("rollout \"" + r.sample_id +
                                "\" is missing log-probabilities or advantages");
  }
}

struct UnitTerms {
  double surrogate;
  double dsurrogate;  // d surrogate / d logp_new
  double kl;
  double dkl;  // d kl / d logp_new
  bool clipped;
  bool clamped;
};

UnitTerms unit_terms(double logp_new, double logp_old, double logp_ref, double advantage,
                     double epsilon) {
  const auto ratio = importance_ratio(logp_new, logp_old);
  const double unclipped = ratio.value * advantage;
  const double clipped = std::clamp(ratio.value, 1.0 - epsilon, 1.0 + epsilon) * advantage;
  UnitTerms t{};
  t.surrogate = std::min(unclipped, clipped);
  t.clipped = clipped < unclipped;
  t.clamped = ratio.clamped;
  t.dsurrogate = (t.clipped || t.clamped) ? 0.0 : ratio.value * advantage;
  t.kl = kl_penalty(logp_new, logp_ref);
  t.dkl = -std::expm1(logp_ref - logp_new);
  return t;
}

}  // namespace

LossResult grpo_loss(const ToyExpansionPolicy& policy, std::span<const GroupRollout> rollouts,
                     const GrpoConfig& config) {
  if (rollouts.empty()) throw std::invalid_argument("grpo_loss requires at least one rollout");
  const std::size_t vocab = policy.vocab_size();
  LossResult out;
  out.gradient.assign(policy.logits().size(), 0.0);

  for (const auto& r : rollouts) {
    check_rollout(r);
    out.units += config.ratio_level == RatioLevel::sequence
                     ? r.size()
                     : r.size() * policy.expansion_length();
  }
  const double n = static_cast<double>(out.units);
  double surrogate_sum = 0.0, kl_sum = 0.0;
  std::size_t clipped = 0;

  for (const auto& r : rollouts) {
    const std::size_t bucket = policy.bucket(r.query);
    const auto logp = policy.log_probabilities(bucket);
    std::vector<double> prob(logp.size());
    for (std::size_t j = 0; j < logp.size(); ++j) prob[j] = std::exp(logp[j]);
    double* grad_row = out.gradient.data() + bucket * vocab;

    for (std::size_t i = 0; i < r.size(); ++i) {
      const auto& actions = r.actions[i];
      if (actions.size() != policy.expansion_length()) {
        throw std::invalid_argument("action sequence length differs from expansion_length");
      }
      for (auto a : actions) {
        if (a >= vocab) throw std::out_of_range("action index outside vocabulary");
      }
      const double adv = r.advantages[i];

      if (config.ratio_level == RatioLevel::sequence) {
        double lp = 0.0;
        for (auto a : actions) lp += logp[a];
        const auto t = unit_terms(lp, r.logp_old[i], r.logp_ref[i], adv, config.clip_epsilon);
        surrogate_sum += t.surrogate;
        kl_sum += t.kl;
        clipped += t.clipped;
        out.ratio_clamps += t.clamped;
        // dlp/dz_j = count_j - L * p_j
        const double coeff = (-t.dsurrogate + config.kl_beta * t.dkl) / n;
        if (coeff != 0.0) {
          const double len = static_cast<double>(actions.size());
          for (std::size_t j = 0; j < vocab; ++j) grad_row[j] -= coeff * len * prob[j];
          for (auto a : actions) grad_row[a] += coeff;
        }
      } else {
        for (std::size_t k = 0; k < actions.size(); ++k) {
          const auto a = actions[k];
          const auto t = unit_terms(logp[a], r.token_logp_old[i][k], r.token_logp_ref[i][k], adv,
                                    config.clip_epsilon);
          surrogate_sum += t.surrogate;
          kl_sum += t.kl;
          clipped += t.clipped;
          out.ratio_clamps += t.clamped;
          const double coeff = (-t.dsurrogate + config.kl_beta * t.dkl) / n;
          if (coeff != 0.0) {
            for (std::size_t j = 0; j < vocab; ++j) grad_row[j] -= coeff * prob[j];
            grad_row[a] += coeff;
          }
        }
      }
    }
  }

  out.loss = (-surrogate_sum + config.kl_beta * kl_sum) / n;
  out.mean_kl = kl_sum / n;
  out.clip_fraction = static_cast<double>(clipped) / n;
  return out;
}

StepStats grpo_step(ToyExpansionPolicy& policy, std::span<const GroupRollout> rollouts,
                    const GrpoConfig& config) {
  const auto result = grpo_loss(policy, rollouts, config);
  auto logits = policy.mutable_logits();
  for (std::size_t i = 0; i < logits.size(); ++i) {
    logits[i] -= config.learning_rate * result.gradient[i];
  }
  return {result.loss, result.mean_kl, result.clip_fraction, result.ratio_clamps};
}

}  // namespace qrt
