#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <vector>

#include "qrt/corpus.hpp"
#include "qrt/grpo.hpp"
#include "qrt/relevance.hpp"
#include "qrt/reward.hpp"
#include "qrt/toy_policy.hpp"

namespace qrt {

struct TrainLogEntry {
  std::size_t iter = 0;  // 1-based
  double mean_reward = 0.0;
  double mean_kl = 0.0;
  double loss = 0.0;
  double clip_frac = 0.0;
  std::size_t ratio_clamps = 0;

  friend bool operator==(const TrainLogEntry&, const TrainLogEntry&) = default;
};

using TrainLog = std::vector<TrainLogEntry>;

struct TrainResult {
  ToyExpansionPolicy policy;
  TrainLog log;
};

/// Called after every iteration; return false to stop early.
using TrainCallback = std::function<bool(const TrainLogEntry&, const ToyExpansionPolicy&)>;

/// GRPO over `dataset` starting from `initial`.
///
/// Each iteration visits every sample in order, in batches of
/// config.groups_per_step groups: sample a group from the current policy,
/// score it, normalize advantages, then run config.inner_epochs updates
/// against that batch. The initial policy is kept frozen as the KL
/// reference. One log entry per iteration; loss, KL and clip fraction are
/// averaged over that iteration's updates and mean_reward over all of its
/// rewards. Randomness comes from config.seed only.
TrainResult train(const TrainingSet& dataset, const RelevanceProvider& provider,
                  const ToyExpansionPolicy& initial, const GrpoConfig& config,
                  std::size_t iterations, const RewardOptions& reward_options = {},
                  const TrainCallback& callback = {});

/// JSON lines {"iter","mean_reward","mean_kl","loss","clip_frac","ratio_clamps"}.
void write_train_log(const std::filesystem::path& path, const TrainLog& log);

}  // namespace qrt
