#include "qrt/remote_embedder.hpp"

#include <cmath>
#include <condition_variable>
#include <mutex>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "qrt/hashing.hpp"

namespace qrt {

/// Counting gate on outstanding requests.
struct RemoteEmbedder::Slots {
  explicit Slots(std::size_t n) : free(n) {}

  void acquire() {
    std::unique_lock lock(mutex);
    cv.wait(lock, [&] { return free > 0; });
    --free;
  }
  void release() {
    {
      std::lock_guard lock(mutex);
      ++free;
    }
    cv.notify_one();
  }

  std::mutex mutex;
  std::condition_variable cv;
  std::size_t free;
};

RemoteEmbedder::RemoteEmbedder(RemoteOptions options)
    : options_(std::move(options)),
      dim_(options_.dim),
      slots_(std::make_unique<Slots>(std::max<std::size_t>(1, options_.max_in_flight))) {
  if (options_.batch_size == 0) options_.batch_size = 1;
}

RemoteEmbedder::~RemoteEmbedder() = default;

std::size_t RemoteEmbedder::cache_size() const {
  std::lock_guard lock(cache_mutex_);
  return cache_.size();
}

EmbeddingVector RemoteEmbedder::embed(std::string_view text) const {
  const std::string t(text);
  return embed_batch(std::span<const std::string>(&t, 1)).front();
}

std::vector<EmbeddingVector> RemoteEmbedder::embed_batch(
    std::span<const std::string> texts) const {
  std::vector<std::string> keys;
  keys.reserve(texts.size());
  for (const auto& t : texts) keys.push_back(sha256_hex(t));

  std::vector<std::string> pending;
  std::vector<std::string> pending_keys;
  {
    std::lock_guard lock(cache_mutex_);
    std::unordered_map<std::string, bool> queued;
    for (std::size_t i = 0; i < texts.size(); ++i) {
      if (cache_.contains(keys[i]) || queued.contains(keys[i])) continue;
      queued.emplace(keys[i], true);
      pending.push_back(texts[i]);
      pending_keys.push_back(keys[i]);
    }
  }

  for (std::size_t start = 0; start < pending.size(); start += options_.batch_size) {
    const std::size_t end = std::min(pending.size(), start + options_.batch_size);
    std::vector<std::string> chunk(pending.begin() + static_cast<std::ptrdiff_t>(start),
                                   pending.begin() + static_cast<std::ptrdiff_t>(end));
    auto vectors = request(chunk);
    std::lock_guard lock(cache_mutex_);
    for (std::size_t i = 0; i < vectors.size(); ++i) {
      // First writer wins so concurrent callers observe one vector per text.
      cache_.try_emplace(pending_keys[start + i], EmbeddingVector(std::move(vectors[i])));
    }
  }

  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  std::lock_guard lock(cache_mutex_);
  for (const auto& k : keys) out.push_back(cache_.at(k));
  return out;
}

std::vector<std::vector<double>> RemoteEmbedder::request(
    const std::vector<std::string>& texts) const {
  using nlohmann::json;
  const std::string body = json{{"texts", texts}}.dump();
  std::string last_error;

  for (std::size_t attempt = 0; attempt <= options_.retries; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(options_.retry_backoff * attempt);
    slots_->acquire();
    httplib::Result res{nullptr, httplib::Error::Unknown};
    try {
      httplib::Client client(options_.base_url);
      const auto secs = std::chrono::duration_cast<std::chrono::seconds>(options_.timeout);
      const auto usecs =
          std::chrono::duration_cast<std::chrono::microseconds>(options_.timeout - secs);
      client.set_connection_timeout(secs.count(), usecs.count());
      client.set_read_timeout(secs.count(), usecs.count());
      client.set_write_timeout(secs.count(), usecs.count());
      ++requests_;
      res = client.Post(options_.path, body, "application/json");
    } catch (const std::exception& e) {
      slots_->release();
      last_error = e.what();
      continue;
    }
    slots_->release();

    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status != 200) {
      last_error = "HTTP status " + std::to_string(res->status);
      continue;
    }
    try {
      const json reply = json::parse(res->body);
      const auto& vectors = reply.at("vectors");
      if (!vectors.is_array() || vectors.size() != texts.size()) {
        last_error = "expected " + std::to_string(texts.size()) + " vectors";
        continue;
      }
      std::vector<std::vector<double>> out;
      out.reserve(texts.size());
      for (const auto& v : vectors) out.push_back(v.get<std::vector<double>>());
      std::size_t expected = dim_.load();
      for (const auto& v : out) {
        if (v.empty()) throw RemoteError("embedding service returned an empty vector");
        if (expected == 0) {
          dim_.compare_exchange_strong(expected, v.size());
          expected = dim_.load();
        }
        if (v.size() != expected) {
          throw RemoteError("embedding service returned dim " + std::to_string(v.size()) +
                            ", expected " + std::to_string(expected));
        }
        for (double x : v) {
          if (!std::isfinite(x)) throw RemoteError("embedding service returned non-finite value");
        }
      }
      return out;
    } catch (const json::exception& e) {
      last_error = std::string("malformed response: ") + e.what();
    }
  }
  throw RemoteError("embedding request to " + options_.base_url + options_.path + " failed after " +
                    std::to_string(options_.retries + 1) + " attempts: " + last_error);
}

}  // namespace qrt
