#include "qrt/trainer.hpp"

#include <stdexcept>

#include <json.hpp>

#include "qrt/hashing.hpp"
#include "qrt/io.hpp"

namespace qrt {

TrainResult train(const TrainingSet& dataset, const RelevanceProvider& provider,
                  const ToyExpansionPolicy& initial, const GrpoConfig& config,
                  std::size_t iterations, const RewardOptions& reward_options,
                  const TrainCallback& callback) {
  config.validate();
  if (dataset.empty()) throw std::invalid_argument("training set is empty");
  for (const auto& s : dataset) validate_sample(s);

  const ToyExpansionPolicy& reference = initial;
  TrainResult result{initial, {}};
  ToyExpansionPolicy& policy = result.policy;
  result.log.reserve(iterations);

  for (std::size_t iter = 1; iter <= iterations; ++iter) {
    TrainLogEntry entry;
    entry.iter = iter;
    double reward_sum = 0.0;
    std::size_t reward_count = 0;
    std::size_t updates = 0;

    for (std::size_t start = 0; start < dataset.size(); start += config.groups_per_step) {
      const std::size_t end = std::min(dataset.size(), start + config.groups_per_step);
      std::vector<GroupRollout> batch;
      batch.reserve(end - start);
      for (std::size_t s = start; s < end; ++s) {
        const auto& sample = dataset[s];
        auto rollout = sample_group(policy, sample.query.text, config.group_size,
                                    derive_seed(config.seed, iter, s));
        rollout.sample_id = sample.query.id;
        attach_reference(rollout, reference);
        const auto records = score_group(provider, sample, rollout.rewrites, reward_options);
        for (const auto& rec : records) {
          rollout.rewards.push_back(rec.reward);
          reward_sum += rec.reward;
        }
        reward_count += records.size();
        rollout.advantages =
            normalize_advantages(rollout.rewards, config.delta, config.group_weight_mode);
        batch.push_back(std::move(rollout));
      }
      for (std::size_t epoch = 0; epoch < config.inner_epochs; ++epoch) {
        const auto stats = grpo_step(policy, batch, config);
        entry.loss += stats.loss;
        entry.mean_kl += stats.mean_kl;
        entry.clip_frac += stats.clip_fraction;
        entry.ratio_clamps += stats.ratio_clamps;
        ++updates;
      }
    }

    entry.loss /= static_cast<double>(updates);
    entry.mean_kl /= static_cast<double>(updates);
    entry.clip_frac /= static_cast<double>(updates);
    entry.mean_reward = reward_sum / static_cast<double>(reward_count);
    result.log.push_back(entry);
    if (callback && !callback(entry, policy)) break;
  }
  return result;
}

void write_train_log(const std::filesystem::path& path, const TrainLog& log) {
  auto out = open_output(path);
  for (const auto& e : log) {
    out << nlohmann::json{{"iter", e.iter},
                          {"mean_reward", e.mean_reward},
                          {"mean_kl", e.mean_kl},
                          {"loss", e.loss},
                          {"clip_frac", e.clip_frac},
                          {"ratio_clamps", e.ratio_clamps}}
               .dump()
        << '\n';
  }
}

}  // namespace qrt
