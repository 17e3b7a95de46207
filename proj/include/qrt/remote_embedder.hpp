#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>

#include "qrt/relevance.hpp"

namespace qrt {

struct RemoteOptions {
  /// Scheme, host and port, e.g. "http://127.0.0.1:8080".
  std::string base_url = "http://127.0.0.1:8080";
  std::string path = "/embed";
  /// Expected vector dimension; 0 adopts the first response's dimension.
  std::size_t dim = 0;
  std::chrono::milliseconds timeout{30000};
  /// Retries after the first failed attempt.
  std::size_t retries = 3;
  std::chrono::milliseconds retry_backoff{100};
  std::size_t max_in_flight = 4;
  std::size_t batch_size = 32;
};

/// Client for an embedding service speaking
///   POST <path> {"texts": [...]}  ->  {"vectors": [[...], ...]}
///
/// Responses are cached by SHA-256 of the text, so a text embeds to the
/// same vector for the lifetime of the client. At most `max_in_flight`
/// requests are outstanding across all threads. Failures after the retry
/// budget raise RemoteError.
class RemoteEmbedder final : public RelevanceProvider {
 public:
  explicit RemoteEmbedder(RemoteOptions options);
  ~RemoteEmbedder() override;

  ProviderKind kind() const noexcept override { return ProviderKind::remote_service; }
  std::size_t dim() const noexcept override { return dim_.load(); }
  EmbeddingVector embed(std::string_view text) const override;
  std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) const override;

  std::size_t cache_size() const;
  /// HTTP requests issued so far, retries included.
  std::size_t request_count() const noexcept { return requests_.load(); }

 private:
  std::vector<std::vector<double>> request(const std::vector<std::string>& texts) const;

  struct Slots;

  RemoteOptions options_;
  mutable std::atomic<std::size_t> dim_;
  mutable std::atomic<std::size_t> requests_{0};
  mutable std::mutex cache_mutex_;
  mutable std::unordered_map<std::string, EmbeddingVector> cache_;
  std::unique_ptr<Slots> slots_;
};

}  // namespace qrt
