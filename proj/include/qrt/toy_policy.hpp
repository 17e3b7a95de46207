#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qrt/random.hpp"

namespace qrt {

/// Tabular stand-in for an LLM rewriter.
///
/// A query is hashed to one of `feature_buckets` rows; each row holds one
/// logit per vocabulary term. A rewrite appends `expansion_length` terms
/// drawn i.i.d. (with replacement) from the row's softmax, so
///   log pi(actions | query) = sum_t log_softmax(row)[a_t].
class ToyExpansionPolicy {
 public:
  /// All logits start at zero. Throws std::invalid_argument when the vocab
  /// has fewer than 2 terms or a size argument is zero.
  ToyExpansionPolicy(std::vector<std::string> vocab, std::size_t feature_buckets,
                     std::size_t expansion_length);

  std::size_t vocab_size() const noexcept { return vocab_.size(); }
  std::size_t feature_buckets() const noexcept { return buckets_; }
  std::size_t expansion_length() const noexcept { return length_; }
  const std::vector<std::string>& vocab() const noexcept { return vocab_; }

  /// Row-major [feature_buckets x vocab_size].
  std::span<const double> logits() const noexcept { return logits_; }
  std::span<double> mutable_logits() noexcept { return logits_; }
  std::span<const double> row(std::size_t bucket) const;
  std::span<double> mutable_row(std::size_t bucket);

  /// FNV-1a of the raw query bytes modulo feature_buckets.
  std::size_t bucket(std::string_view query) const;

  std::vector<double> probabilities(std::size_t bucket) const;
  std::vector<double> log_probabilities(std::size_t bucket) const;

  /// Sum of per-draw log-probabilities. Throws std::out_of_range on an
  /// action index >= vocab_size().
  double log_prob(std::string_view query, std::span<const std::size_t> actions) const;
  std::vector<double> token_log_probs(std::string_view query,
                                      std::span<const std::size_t> actions) const;

  std::vector<std::size_t> sample(std::string_view query, Rng& rng) const;

  /// The expansion_length highest-probability distinct terms (ties by
  /// lower index). Drawing with replacement would just repeat the argmax.
  std::vector<std::size_t> greedy(std::string_view query) const;

  /// query + " " + the chosen terms joined by single spaces.
  std::string render(std::string_view query, std::span<const std::size_t> actions) const;

  /// {"vocab": [...], "feature_buckets": F, "expansion_length": L,
  ///  "logits": [[...], ...]}
  void save(const std::filesystem::path& path) const;
  static ToyExpansionPolicy load(const std::filesystem::path& path);

  friend bool operator==(const ToyExpansionPolicy&, const ToyExpansionPolicy&) = default;

 private:
  std::vector<std::string> vocab_;
  std::size_t buckets_;
  std::size_t length_;
  std::vector<double> logits_;
};

}  // namespace qrt
