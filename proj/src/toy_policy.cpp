#include "qrt/toy_policy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "qrt/error.hpp"
#include "qrt/hashing.hpp"
#include "qrt/io.hpp"

namespace qrt {

ToyExpansionPolicy::ToyExpansionPolicy(std::vector<std::string> vocab,
                                       std::size_t feature_buckets,
                                       std::size_t expansion_length)
    : vocab_(std::move(vocab)), buckets_(feature_buckets), length_(expansion_length) {
  if (vocab_.size() < 2) throw std::invalid_argument("policy vocabulary needs at least 2 terms");
  if (buckets_ == 0) throw std::invalid_argument("feature_buckets must be >= 1");
  if (length_ == 0) throw std::invalid_argument("expansion_length must be >= 1");
  logits_.assign(buckets_ * vocab_.size(), 0.0);
}

std::span<const double> ToyExpansionPolicy::row(std::size_t bucket) const {
  if (bucket >= buckets_) throw std::out_of_range("feature bucket out of range");
  return std::span<const double>(logits_).subspan(bucket * vocab_.size(), vocab_.size());
}

std::span<double> ToyExpansionPolicy::mutable_row(std::size_t bucket) {
  if (bucket >= buckets_) throw std::out_of_range("feature bucket out of range");
  return std::span<double>(logits_).subspan(bucket * vocab_.size(), vocab_.size());
}

std::size_t ToyExpansionPolicy::bucket(std::string_view query) const {
  return static_cast<std::size_t>(fnv1a64(query) % buckets_);
}

std::vector<double> ToyExpansionPolicy::log_probabilities(std::size_t bucket) const {
  const auto r = row(bucket);
  const double mx = *std::max_element(r.begin(), r.end());
  double z = 0.0;
  for (double x : r) z += std::exp(x - mx);
  const double lse = mx + std::log(z);
  std::vector<double> out(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) out[i] = r[i] - lse;
  return out;
}

std::vector<double> ToyExpansionPolicy::probabilities(std::size_t bucket) const {
  auto lp = log_probabilities(bucket);
  for (double& x : lp) x = std::exp(x);
  return lp;
}

std::vector<double> ToyExpansionPolicy::token_log_probs(
    std::string_view query, std::span<const std::size_t> actions) const {
  const auto lp = log_probabilities(bucket(query));
  std::vector<double> out;
  out.reserve(actions.size());
  for (auto a : actions) {
    if (a >= lp.size()) {
      throw std::out_of_range("action " + std::to_string(a) + " outside vocabulary of size " +
                              std::to_string(lp.size()));
    }
    out.push_back(lp[a]);
  }
  return out;
}

double ToyExpansionPolicy::log_prob(std::string_view query,
                                    std::span<const std::size_t> actions) const {
  const auto per_token = token_log_probs(query, actions);
  return std::accumulate(per_token.begin(), per_token.end(), 0.0);
}

std::vector<std::size_t> ToyExpansionPolicy::sample(std::string_view query, Rng& rng) const {
  const auto p = probabilities(bucket(query));
  std::vector<std::size_t> actions(length_);
  for (auto& a : actions) a = rng.categorical(p);
  return actions;
}

std::vector<std::size_t> ToyExpansionPolicy::greedy(std::string_view query) const {
  const auto r = row(bucket(query));
  std::vector<std::size_t> order(r.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return r[a] > r[b]; });
  order.resize(std::min(length_, order.size()));
  return order;
}

std::string ToyExpansionPolicy::render(std::string_view query,
                                       std::span<const std::size_t> actions) const {
  std::string out(query);
  for (auto a : actions) {
    out += ' ';
    out += vocab_.at(a);
  }
  return out;
}

void ToyExpansionPolicy::save(const std::filesystem::path& path) const {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t b = 0; b < buckets_; ++b) {
    const auto r = row(b);
    rows.push_back(std::vector<double>(r.begin(), r.end()));
  }
  nlohmann::json obj{{"vocab", vocab_},
                     {"feature_buckets", buckets_},
                     {"expansion_length", length_},
                     {"logits", std::move(rows)}};
  auto out = open_output(path);
  out << obj.dump() << '\n';
}

ToyExpansionPolicy ToyExpansionPolicy::load(const std::filesystem::path& path) {
  try {
    const auto obj = nlohmann::json::parse(read_file(path));
    ToyExpansionPolicy policy(obj.at("vocab").get<std::vector<std::string>>(),
                              obj.at("feature_buckets").get<std::size_t>(),
                              obj.at("expansion_length").get<std::size_t>());
    const auto& rows = obj.at("logits");
    if (!rows.is_array() || rows.size() != policy.buckets_) {
      throw DataError("logits must have one row per feature bucket");
    }
    for (std::size_t b = 0; b < policy.buckets_; ++b) {
      const auto values = rows[b].get<std::vector<double>>();
      if (values.size() != policy.vocab_size()) throw DataError("logit row has wrong length");
      auto dst = policy.mutable_row(b);
      for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i])) throw DataError("non-finite logit");
        dst[i] = values[i];
      }
    }
    return policy;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": malformed policy checkpoint: " + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(path.string() + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace qrt
