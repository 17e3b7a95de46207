#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "qrt/analysis.hpp"
#include "qrt/corpus.hpp"

namespace qrt {

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;

  /// Throws UsageError unless k1 > 0 and b in [0, 1].
  void validate() const;
};

struct Posting {
  std::uint32_t doc;  // ordinal
  std::uint32_t tf;

  friend bool operator==(const Posting&, const Posting&) = default;
};

struct ScoredDoc {
  std::string doc_id;
  double score;

  friend bool operator==(const ScoredDoc&, const ScoredDoc&) = default;
};

/// Top-k result: scores non-increasing, ties ordered by ascending doc id.
struct RankedList {
  std::vector<ScoredDoc> entries;

  friend bool operator==(const RankedList&, const RankedList&) = default;
};

/// idf(t) = ln(1 + (N - df + 0.5) / (df + 0.5)); strictly positive for df <= N.
double bm25_idf(std::size_t doc_count, std::size_t doc_freq);

/// Immutable in-memory inverted index. Concurrent reads are safe.
class InvertedIndex {
 public:
  static InvertedIndex build(const DocumentCollection& docs, const AnalysisOptions& analysis = {});

  std::size_t doc_count() const noexcept { return doc_ids_.size(); }
  double avg_doc_length() const noexcept { return avg_doc_length_; }
  const std::vector<std::uint32_t>& doc_lengths() const noexcept { return doc_lengths_; }
  const std::string& doc_id(std::size_t ordinal) const { return doc_ids_.at(ordinal); }
  const AnalysisOptions& analysis() const noexcept { return analysis_; }
  std::size_t term_count() const noexcept { return postings_.size(); }

  /// Postings of `term` sorted by ordinal; empty when the term is unknown.
  std::span<const Posting> postings(std::string_view term) const;

  /// Query tokens under the index's own analysis options.
  std::vector<std::string> analyze(std::string_view text) const;

  /// BM25 of one document, summed over every query-token occurrence.
  /// Throws std::out_of_range when `ordinal >= doc_count()`.
  double score(std::span<const std::string> query_tokens, std::size_t ordinal,
               const Bm25Params& params = {}) const;

  /// Top-k documents with positive score. k must be >= 1.
  RankedList search(std::span<const std::string> query_tokens, std::size_t k,
                    const Bm25Params& params = {}) const;
  RankedList search(std::string_view query_text, std::size_t k,
                    const Bm25Params& params = {}) const;

  /// Binary snapshot; layout in docs/index_format.md.
  void save(const std::filesystem::path& path) const;
  static InvertedIndex load(const std::filesystem::path& path);

  friend bool operator==(const InvertedIndex& a, const InvertedIndex& b);

 private:
  double term_weight(std::size_t doc_freq, std::uint32_t tf, std::size_t ordinal,
                     const Bm25Params& params) const;
  void finalize_stats();

  std::unordered_map<std::string, std::vector<Posting>> postings_;
  std::vector<std::uint32_t> doc_lengths_;
  std::vector<std::string> doc_ids_;
  double avg_doc_length_ = 0.0;
  AnalysisOptions analysis_;
};

}  // namespace qrt
