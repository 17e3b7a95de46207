#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "qrt/analysis.hpp"
#include "qrt/error.hpp"

namespace qrt {

/// Fixed-dimension real vector with finite entries.
class EmbeddingVector {
 public:
  /// Throws std::invalid_argument on an empty or non-finite vector.
  explicit EmbeddingVector(std::vector<double> values);

  static EmbeddingVector zeros(std::size_t dim);

  std::size_t dim() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  double norm() const;

  friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;

 private:
  std::vector<double> values_;
};

/// Cosine similarity; 0 when either vector has zero norm.
/// Throws std::invalid_argument on a dimension mismatch.
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

enum class ProviderKind { precomputed_store, hashed_test_embedder, remote_service };

/// A frozen text encoder. Implementations never change their output for a
/// given text during a run, and const calls are safe from many threads.
class RelevanceProvider {
 public:
  virtual ~RelevanceProvider() = default;

  virtual ProviderKind kind() const noexcept = 0;
  virtual std::size_t dim() const noexcept = 0;
  virtual EmbeddingVector embed(std::string_view text) const = 0;
  virtual std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) const;
};

/// cosine(embed(q), embed(d)).
double relevance(const RelevanceProvider& provider, std::string_view q, std::string_view d);

/// Missing entry in a precomputed vector store.
class MissingKeyError : public DataError {
 public:
  using DataError::DataError;
};

/// Deterministic bag-of-words embedder.
///
/// Tokens are hashed with FNV-1a (64-bit) into `dim` buckets, counts are
/// accumulated and the result is L2-normalized. Texts with more than
/// `max_tokens` tokens (0 = unlimited) are truncated with a warning.
class HashedEmbedder final : public RelevanceProvider {
 public:
  explicit HashedEmbedder(std::size_t dim = 1024, AnalysisOptions analysis = {},
                          std::size_t max_tokens = 0);

  ProviderKind kind() const noexcept override { return ProviderKind::hashed_test_embedder; }
  std::size_t dim() const noexcept override { return dim_; }
  EmbeddingVector embed(std::string_view text) const override;

  std::size_t bucket(std::string_view token) const;

 private:
  std::size_t dim_;
  AnalysisOptions analysis_;
  std::size_t max_tokens_;
};

/// Vectors loaded from JSON lines {"key": sha256-hex of text, "vector": [...]}.
class PrecomputedStore final : public RelevanceProvider {
 public:
  static PrecomputedStore load(const std::filesystem::path& path);

  ProviderKind kind() const noexcept override { return ProviderKind::precomputed_store; }
  std::size_t dim() const noexcept override { return dim_; }
  /// Throws MissingKeyError naming the text's hash when absent.
  EmbeddingVector embed(std::string_view text) const override;

  std::size_t size() const noexcept { return vectors_.size(); }

 private:
  std::unordered_map<std::string, EmbeddingVector> vectors_;
  std::size_t dim_ = 0;
};

/// Writes the store format for (text, vector) pairs.
void write_precomputed_store(const std::filesystem::path& path,
                             std::span<const std::pair<std::string, EmbeddingVector>> entries);

}  // namespace qrt
