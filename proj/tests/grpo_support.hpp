#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "qrt/grpo.hpp"

namespace qrt::testing {

struct GradientCase {
  ToyExpansionPolicy policy;
  std::vector<GroupRollout> rollouts;
  GrpoConfig config;
};

inline ToyExpansionPolicy random_policy(std::mt19937_64& gen, std::size_t vocab,
                                        std::size_t buckets, std::size_t length, double scale) {
  std::vector<std::string> words;
  for (std::size_t i = 0; i < vocab; ++i) words.push_back("w" + std::to_string(i));
  ToyExpansionPolicy p(words, buckets, length);
  std::normal_distribution<double> n(0.0, scale);
  for (double& z : p.mutable_logits()) z = n(gen);
  return p;
}

// Distance of every ratio from the clip edges; finite differences are only
// meaningful away from those kinks.
inline double kink_margin(const GradientCase& c) {
  double margin = 1e9;
  const double eps = c.config.clip_epsilon;
  for (const auto& r : c.rollouts) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      const auto tok = c.policy.token_log_probs(r.query, r.actions[i]);
      std::vector<double> ratios;
      if (c.config.ratio_level == RatioLevel::sequence) {
        double lp = 0.0;
        for (double x : tok) lp += x;
        ratios.push_back(std::exp(lp - r.logp_old[i]));
      } else {
        for (std::size_t k = 0; k < tok.size(); ++k) {
          ratios.push_back(std::exp(tok[k] - r.token_logp_old[i][k]));
        }
      }
      for (double q : ratios) {
        margin = std::min({margin, std::abs(q - (1.0 - eps)), std::abs(q - (1.0 + eps))});
      }
    }
  }
  return margin;
}

// Small random policy, rollouts sampled from a perturbed behavior policy and
// scored against a third, reference policy. Advantages are random.
inline GradientCase random_gradient_case(std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  auto pick = [&](std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(gen);
  };
  const std::size_t vocab = pick(2, 6), buckets = pick(1, 3), length = pick(1, 3);
  for (;;) {
    GradientCase c{random_policy(gen, vocab, buckets, length, 1.0), {}, {}};
    const auto old = [&] {
      auto p = c.policy;
      std::normal_distribution<double> n(0.0, 0.15);
      for (double& z : p.mutable_logits()) z += n(gen);
      return p;
    }();
    const auto ref = random_policy(gen, vocab, buckets, length, 0.5);

    c.config.clip_epsilon = 0.2;
    c.config.kl_beta = std::uniform_real_distribution<double>(0.0, 0.5)(gen);
    c.config.ratio_level = pick(0, 1) == 0 ? RatioLevel::sequence : RatioLevel::token;

    const std::size_t groups = pick(1, 3);
    for (std::size_t g = 0; g < groups; ++g) {
      auto r = sample_group(old, "query " + std::to_string(g), pick(2, 4), gen());
      attach_reference(r, ref);
      std::normal_distribution<double> n(0.0, 1.0);
      for (std::size_t i = 0; i < r.size(); ++i) r.advantages.push_back(n(gen));
      c.rollouts.push_back(std::move(r));
    }
    if (kink_margin(c) > 1e-3) return c;
  }
}

struct GradientCheck {
  double max_rel_error = 0.0;
  std::size_t coordinates = 0;
};

// Central differences with step h; relative error uses max(|a|, |n|, 1e-6)
// so coordinates whose true derivative is zero compare on an absolute scale.
inline GradientCheck check_gradient(const GradientCase& c, double h = 1e-5) {
  const auto analytic = grpo_loss(c.policy, c.rollouts, c.config).gradient;
  GradientCheck out;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    auto plus = c.policy;
    auto minus = c.policy;
    plus.mutable_logits()[i] += h;
    minus.mutable_logits()[i] -= h;
    const double numeric = (grpo_loss(plus, c.rollouts, c.config).loss -
                            grpo_loss(minus, c.rollouts, c.config).loss) /
                           (2.0 * h);
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-6});
    out.max_rel_error = std::max(out.max_rel_error, std::abs(analytic[i] - numeric) / denom);
    ++out.coordinates;
  }
  return out;
}

}  // namespace qrt::testing
