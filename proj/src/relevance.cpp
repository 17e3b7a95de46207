#include "qrt/relevance.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "qrt/hashing.hpp"
#include "qrt/io.hpp"
#include "qrt/log.hpp"

namespace qrt {

EmbeddingVector::EmbeddingVector(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw std::invalid_argument("embedding must have dim >= 1");
  for (double v : values_) {
    if (!std::isfinite(v)) throw std::invalid_argument("embedding has a non-finite entry");
  }
}

EmbeddingVector EmbeddingVector::zeros(std::size_t dim) {
  return EmbeddingVector(std::vector<double>(dim, 0.0));
}

double EmbeddingVector::norm() const {
  double s = 0.0;
  for (double v : values_) s += v * v;
  return std::sqrt(s);
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dim() != b.dim()) {
    throw std::invalid_argument("dimension mismatch: " + std::to_string(a.dim()) + " vs " +
                                std::to_string(b.dim()));
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  const double c = dot / (std::sqrt(na) * std::sqrt(nb));
  return std::clamp(c, -1.0, 1.0);
}

std::vector<EmbeddingVector> RelevanceProvider::embed_batch(
    std::span<const std::string> texts) const {
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(embed(t));
  return out;
}

double relevance(const RelevanceProvider& provider, std::string_view q, std::string_view d) {
  return cosine(provider.embed(q), provider.embed(d));
}

HashedEmbedder::HashedEmbedder(std::size_t dim, AnalysisOptions analysis, std::size_t max_tokens)
    : dim_(dim), analysis_(std::move(analysis)), max_tokens_(max_tokens) {
  if (dim_ == 0) throw std::invalid_argument("hashed embedder dim must be >= 1");
}

std::size_t HashedEmbedder::bucket(std::string_view token) const {
  return static_cast<std::size_t>(fnv1a64(token) % dim_);
}

EmbeddingVector HashedEmbedder::embed(std::string_view text) const {
  auto tokens = tokenize(text, analysis_);
  if (max_tokens_ > 0 && tokens.size() > max_tokens_) {
    log_warning("hashed embedder: truncating input from " + std::to_string(tokens.size()) +
                " to " + std::to_string(max_tokens_) + " tokens");
    tokens.resize(max_tokens_);
  }
  std::vector<double> v(dim_, 0.0);
  for (const auto& t : tokens) v[bucket(t)] += 1.0;
  double n = 0.0;
  for (double x : v) n += x * x;
  if (n > 0.0) {
    n = std::sqrt(n);
    for (double& x : v) x /= n;
  }
  return EmbeddingVector(std::move(v));
}

PrecomputedStore PrecomputedStore::load(const std::filesystem::path& path) {
  using nlohmann::json;
  PrecomputedStore store;
  for_each_line(path, [&](std::size_t line_no, const std::string& line) {
    const std::string where = path.string() + ":" + std::to_string(line_no) + ": ";
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError(where + "malformed JSON: " + e.what());
    }
    if (!obj.is_object() || !obj.contains("key") || !obj["key"].is_string() ||
        !obj.contains("vector") || !obj["vector"].is_array()) {
      throw DataError(where + "expected {\"key\": string, \"vector\": [numbers]}");
    }
    std::vector<double> values;
    for (const auto& x : obj["vector"]) {
      if (!x.is_number()) throw DataError(where + "vector entries must be numbers");
      values.push_back(x.get<double>());
    }
    if (store.dim_ == 0) store.dim_ = values.size();
    if (values.size() != store.dim_) {
      throw DataError(where + "vector has dim " + std::to_string(values.size()) + ", expected " +
                      std::to_string(store.dim_));
    }
    try {
      auto key = obj["key"].get<std::string>();
      if (!store.vectors_.emplace(key, EmbeddingVector(std::move(values))).second) {
        throw DataError(where + "duplicate key " + key);
      }
    } catch (const std::invalid_argument& e) {
      throw DataError(where + e.what());
    }
  });
  return store;
}

EmbeddingVector PrecomputedStore::embed(std::string_view text) const {
  const auto key = sha256_hex(text);
  auto it = vectors_.find(key);
  if (it == vectors_.end()) throw MissingKeyError("no precomputed vector for text hash " + key);
  return it->second;
}

void write_precomputed_store(const std::filesystem::path& path,
                             std::span<const std::pair<std::string, EmbeddingVector>> entries) {
  auto out = open_output(path);
  for (const auto& [text, vec] : entries) {
    nlohmann::json v = nlohmann::json::array();
    for (double x : vec.values()) v.push_back(x);
    out << nlohmann::json{{"key", sha256_hex(text)}, {"vector", std::move(v)}}.dump() << '\n';
  }
}

}  // namespace qrt
