#include "qrt/grpo.hpp"

#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "grpo_support.hpp"
#include "qrt/error.hpp"

using qrt::GroupRollout;
using qrt::GrpoConfig;
using qrt::normalize_advantages;
using qrt::ToyExpansionPolicy;

namespace {

ToyExpansionPolicy uniform_policy(std::size_t vocab, std::size_t buckets = 1,
                                  std::size_t length = 1) {
  std::vector<std::string> words;
  for (std::size_t i = 0; i < vocab; ++i) words.push_back("w" + std::to_string(i));
  return ToyExpansionPolicy(words, buckets, length);
}

GroupRollout manual_rollout(const ToyExpansionPolicy& policy, const std::string& query,
                            std::vector<std::vector<std::size_t>> actions,
                            std::vector<double> advantages) {
  GroupRollout r;
  r.query = query;
  r.actions = std::move(actions);
  for (const auto& a : r.actions) {
    r.rewrites.push_back(policy.render(query, a));
    const auto tok = policy.token_log_probs(query, a);
    r.token_logp_old.push_back(tok);
    r.logp_old.push_back(std::accumulate(tok.begin(), tok.end(), 0.0));
  }
  r.advantages = std::move(advantages);
  qrt::attach_reference(r, policy);
  return r;
}

}  // namespace

TEST(Advantages, EqualRewardsGiveZero) {
  const std::vector<double> r{0.3, 0.3, 0.3, 0.3};
  for (double a : normalize_advantages(r, 1e-4)) EXPECT_EQ(a, 0.0);
}

TEST(Advantages, ThreeRewardOracle) {
  const std::vector<double> r{1.0, 2.0, 3.0};
  const double sigma = std::sqrt(2.0 / 3.0);
  const double expected = 1.0 / (sigma + 1e-4);
  EXPECT_NEAR(expected, 1.22459, 1e-5);
  const auto a = normalize_advantages(r, 1e-4);
  EXPECT_NEAR(a[0], -expected, 1e-12);
  EXPECT_EQ(a[1], 0.0);
  EXPECT_NEAR(a[2], expected, 1e-12);
}

TEST(Advantages, TwoRewardOracle) {
  const std::vector<double> r{0.0, 1.0};
  const double expected = 0.5 / (0.5 + 1e-4);
  EXPECT_NEAR(expected, 0.99980, 1e-5);
  const auto a = normalize_advantages(r, 1e-4);
  EXPECT_NEAR(a[0], -expected, 1e-12);
  EXPECT_NEAR(a[1], expected, 1e-12);
}

TEST(Advantages, VarianceScaledWeight) {
  const std::vector<double> r{0.0, 1.0};
  const auto u = normalize_advantages(r, 1e-4);
  const auto w = normalize_advantages(r, 1e-4, qrt::GroupWeightMode::variance_scaled);
  const double weight = 0.5 / (0.5 + 1e-4);
  EXPECT_NEAR(w[1], weight * u[1], 1e-15);
}

TEST(Advantages, SingletonGroupRejected) {
  const std::vector<double> r{1.0};
  EXPECT_THROW(normalize_advantages(r, 1e-4), std::invalid_argument);
}

TEST(ImportanceRatio, Basics) {
  EXPECT_EQ(qrt::importance_ratio(-1.5, -1.5).value, 1.0);
  EXPECT_NEAR(qrt::importance_ratio(std::log(2.0) - 3.0, -3.0).value, 2.0, 1e-12);
}

TEST(ImportanceRatio, ExponentClamped) {
  const auto hi = qrt::importance_ratio(40.0, 0.0);
  EXPECT_TRUE(hi.clamped);
  EXPECT_EQ(hi.value, std::exp(30.0));
  const auto lo = qrt::importance_ratio(0.0, 40.0);
  EXPECT_TRUE(lo.clamped);
  EXPECT_EQ(lo.value, std::exp(-30.0));
  EXPECT_FALSE(qrt::importance_ratio(29.0, 0.0).clamped);
}

TEST(ClippedSurrogate, Cases) {
  EXPECT_EQ(qrt::clipped_surrogate(1.0, 0.5, 0.2), 0.5);
  EXPECT_NEAR(qrt::clipped_surrogate(1.5, 1.0, 0.2), std::min(1.5 * 1.0, 1.2 * 1.0), 1e-15);
  EXPECT_NEAR(qrt::clipped_surrogate(0.5, -1.0, 0.2), std::min(0.5 * -1.0, 0.8 * -1.0), 1e-15);
  EXPECT_NEAR(qrt::clipped_surrogate(0.5, -1.0, 0.2), -0.8, 1e-15);
  // Pessimistic bound: a low ratio with positive advantage is not lifted.
  EXPECT_EQ(qrt::clipped_surrogate(0.5, 1.0, 0.2), 0.5);
}

TEST(KlPenalty, Cases) {
  EXPECT_EQ(qrt::kl_penalty(-2.0, -2.0), 0.0);
  const double ln2 = std::log(2.0);
  EXPECT_NEAR(qrt::kl_penalty(-1.0, -1.0 + ln2), 2.0 - ln2 - 1.0, 1e-12);
  EXPECT_NEAR(qrt::kl_penalty(-1.0, -1.0 + ln2), 0.30685, 1e-5);
  EXPECT_NEAR(qrt::kl_penalty(-1.0, -1.0 - ln2), 0.5 + ln2 - 1.0, 1e-12);
  EXPECT_NEAR(qrt::kl_penalty(-1.0, -1.0 - ln2), 0.19315, 1e-5);
  // Non-negative everywhere.
  for (double x = -5.0; x <= 5.0; x += 0.25) EXPECT_GE(qrt::kl_penalty(0.0, x), 0.0);
}

TEST(SampleGroup, DeterministicForSeed) {
  std::mt19937_64 gen(3);
  const auto p = qrt::testing::random_policy(gen, 6, 2, 3, 1.0);
  const auto a = qrt::sample_group(p, "owls", 8, 42);
  const auto b = qrt::sample_group(p, "owls", 8, 42);
  EXPECT_EQ(a.actions, b.actions);
  EXPECT_EQ(a.rewrites, b.rewrites);
  EXPECT_EQ(a.logp_old, b.logp_old);
  EXPECT_NE(a.actions, qrt::sample_group(p, "owls", 8, 43).actions);
}

TEST(SampleGroup, DegeneratePolicyAlwaysPicksDominantTerm) {
  auto p = uniform_policy(5, 1, 3);
  p.mutable_row(0)[2] = 50.0;
  const auto g = qrt::sample_group(p, "owls", 16, 9);
  ASSERT_EQ(g.size(), 16u);
  for (const auto& a : g.actions) EXPECT_EQ(a, (std::vector<std::size_t>{2, 2, 2}));
  for (const auto& text : g.rewrites) EXPECT_EQ(text, "owls w2 w2 w2");
}

TEST(SampleGroup, UniformTwoByTwo) {
  const auto p = uniform_policy(2, 1, 3);
  const auto g = qrt::sample_group(p, "q", 2, 1);
  ASSERT_EQ(g.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    for (auto a : g.actions[i]) EXPECT_LT(a, 2u);
    EXPECT_NEAR(g.logp_old[i], 3.0 * std::log(0.5), 1e-12);
  }
}

TEST(GrpoLoss, EqualRewardsAndNoKlIsNoOp) {
  std::mt19937_64 gen(5);
  auto p = qrt::testing::random_policy(gen, 4, 2, 2, 1.0);
  auto r = qrt::sample_group(p, "owls", 6, 11);
  qrt::attach_reference(r, p);
  r.rewards.assign(6, 0.25);
  r.advantages = normalize_advantages(r.rewards, 1e-4);
  GrpoConfig cfg;
  cfg.kl_beta = 0.0;
  const auto before = std::vector<double>(p.logits().begin(), p.logits().end());
  const std::vector<GroupRollout> batch{r};
  qrt::grpo_step(p, batch, cfg);
  for (std::size_t i = 0; i < before.size(); ++i) EXPECT_NEAR(p.logits()[i], before[i], 1e-12);
}

TEST(GrpoLoss, TwoByTwoClosedForm) {
  // One group, V=2, L=1, actions {0, 1}, rewards [1, -1], clip inactive, no KL.
  // At the behavior policy p = (1/2, 1/2) and every ratio is 1, so
  //   L = -(1/2) * sum_i A_i * r_i
  //   dL/dz_j = -(1/2) * sum_i A_i * (1[a_i = j] - p_j)
  // which gives dL/dz_0 = -A/2 and dL/dz_1 = +A/2 with A = 1 / (1 + delta).
  auto p = uniform_policy(2);
  const std::vector<double> rewards{1.0, -1.0};
  const auto adv = normalize_advantages(rewards, 1e-4);
  const double A = 1.0 / (1.0 + 1e-4);
  ASSERT_NEAR(adv[0], A, 1e-15);
  const std::vector<GroupRollout> batch{manual_rollout(p, "q", {{0}, {1}}, adv)};
  GrpoConfig cfg;
  cfg.clip_epsilon = 0.99;
  cfg.kl_beta = 0.0;
  cfg.learning_rate = 0.5;
  const auto loss = qrt::grpo_loss(p, batch, cfg);
  EXPECT_NEAR(loss.gradient[0], -A / 2.0, 1e-15);
  EXPECT_NEAR(loss.gradient[1], A / 2.0, 1e-15);
  EXPECT_EQ(loss.units, 2u);
  qrt::grpo_step(p, batch, cfg);
  EXPECT_NEAR(p.logits()[0], 0.5 * A / 2.0, 1e-15);
  EXPECT_NEAR(p.logits()[1], -0.5 * A / 2.0, 1e-15);
}

TEST(GrpoLoss, ClippedUnitsContributeNoSurrogateGradient) {
  auto p = uniform_policy(2);
  auto r = manual_rollout(p, "q", {{0}, {1}}, {1.0, -1.0});
  // Behavior policy put 0.25 on term 0: ratio 2 exceeds 1 + eps for a positive advantage.
  r.logp_old[0] = std::log(0.25);
  r.token_logp_old[0][0] = std::log(0.25);
  r.logp_old[1] = std::log(0.25);
  r.token_logp_old[1][0] = std::log(0.25);
  GrpoConfig cfg;
  cfg.kl_beta = 0.0;
  const std::vector<GroupRollout> batch{r};
  const auto loss = qrt::grpo_loss(p, batch, cfg);
  // Unit 0 is clipped (min picks 1.2*A), unit 1 keeps r*A = -2 and its gradient.
  EXPECT_DOUBLE_EQ(loss.clip_fraction, 0.5);
  EXPECT_NEAR(loss.loss, -(1.2 * 1.0 + 2.0 * -1.0) / 2.0, 1e-12);
  // Only unit 1: dL/dz_j = -(1/2) * r * A * (1[j = 1] - 1/2) with r = 2, A = -1
  EXPECT_NEAR(loss.gradient[0], -0.5, 1e-12);
  EXPECT_NEAR(loss.gradient[1], 0.5, 1e-12);
}

TEST(GrpoLoss, RatioClampsCounted) {
  auto p = uniform_policy(2);
  auto r = manual_rollout(p, "q", {{0}, {1}}, {1.0, -1.0});
  r.logp_old[0] = -100.0;
  const std::vector<GroupRollout> batch{r};
  const auto loss = qrt::grpo_loss(p, batch, GrpoConfig{});
  EXPECT_EQ(loss.ratio_clamps, 1u);
  EXPECT_TRUE(std::isfinite(loss.loss));
}

TEST(GrpoLoss, KlGradientPullsTowardReference) {
  auto p = uniform_policy(2);
  auto r = manual_rollout(p, "q", {{0}, {0}}, {0.0, 0.0});
  // Reference strongly prefers term 0, so the KL term should raise z_0.
  r.logp_ref = {std::log(0.9), std::log(0.9)};
  r.token_logp_ref = {{std::log(0.9)}, {std::log(0.9)}};
  GrpoConfig cfg;
  cfg.kl_beta = 1.0;
  const std::vector<GroupRollout> batch{r};
  const auto loss = qrt::grpo_loss(p, batch, cfg);
  EXPECT_LT(loss.gradient[0], 0.0);
  EXPECT_GT(loss.gradient[1], 0.0);
  EXPECT_NEAR(loss.mean_kl, qrt::kl_penalty(std::log(0.5), std::log(0.9)), 1e-12);
}

TEST(GrpoLoss, TokenLevelCountsTokens) {
  const auto p = uniform_policy(3, 1, 2);
  const std::vector<GroupRollout> batch{manual_rollout(p, "q", {{0, 1}, {2, 2}}, {1.0, -1.0})};
  GrpoConfig cfg;
  cfg.ratio_level = qrt::RatioLevel::token;
  EXPECT_EQ(qrt::grpo_loss(p, batch, cfg).units, 4u);
  cfg.ratio_level = qrt::RatioLevel::sequence;
  EXPECT_EQ(qrt::grpo_loss(p, batch, cfg).units, 2u);
}

TEST(GrpoLoss, MatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto c = qrt::testing::random_gradient_case(seed);
    const auto check = qrt::testing::check_gradient(c);
    EXPECT_LT(check.max_rel_error, 1e-4) << "seed " << seed;
  }
}

TEST(GrpoLoss, RejectsIncompleteRollouts) {
  const auto p = uniform_policy(2);
  auto r = manual_rollout(p, "q", {{0}, {1}}, {1.0, -1.0});
  r.advantages.pop_back();
  const std::vector<GroupRollout> batch{r};
  EXPECT_THROW(qrt::grpo_loss(p, batch, GrpoConfig{}), std::invalid_argument);
}

TEST(Config, Validation) {
  GrpoConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.group_size = 1;
  EXPECT_THROW(cfg.validate(), qrt::UsageError);
  cfg = {};
  cfg.clip_epsilon = 0.0;
  EXPECT_THROW(cfg.validate(), qrt::UsageError);
  cfg = {};
  cfg.delta = 0.0;
  EXPECT_THROW(cfg.validate(), qrt::UsageError);
  cfg = {};
  cfg.kl_beta = -1.0;
  EXPECT_THROW(cfg.validate(), qrt::UsageError);
}
