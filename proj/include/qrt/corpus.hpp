#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace qrt {

struct Document {
  std::string id;
  std::string text;

  friend bool operator==(const Document&, const Document&) = default;
};

struct Query {
  std::string id;
  std::string text;

  friend bool operator==(const Query&, const Query&) = default;
};

/// A query with its positive documents (D+).
struct TrainingSample {
  Query query;
  std::vector<Document> positives;
  std::optional<std::string> category;

  friend bool operator==(const TrainingSample&, const TrainingSample&) = default;
};

using TrainingSet = std::vector<TrainingSample>;

/// Ordered collection of records with unique, non-empty ids.
///
/// Used for both documents and queries. Immutable once built apart from
/// `add`, which rejects duplicate ids.
template <typename Record>
class Collection {
 public:
  Collection() = default;

  /// Throws DataError on an empty or duplicate id.
  void add(Record record);

  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }
  const Record& operator[](std::size_t i) const { return records_[i]; }
  const Record* find(std::string_view id) const;

  auto begin() const noexcept { return records_.begin(); }
  auto end() const noexcept { return records_.end(); }
  const std::vector<Record>& records() const noexcept { return records_; }

  friend bool operator==(const Collection& a, const Collection& b) {
    return a.records_ == b.records_;
  }

 private:
  std::vector<Record> records_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

using DocumentCollection = Collection<Document>;
using QuerySet = Collection<Query>;

/// Graded relevance judgments keyed by (query_id, doc_id).
class QrelSet {
 public:
  /// Throws DataError on a negative grade or a repeated pair.
  void add(std::string query_id, std::string doc_id, int grade);

  /// Grade of the pair, or 0 when unjudged.
  int grade(std::string_view query_id, std::string_view doc_id) const;

  /// doc_id -> grade for one query; empty map when the query is unjudged.
  const std::map<std::string, int>& judgments(std::string_view query_id) const;

  /// Query ids in ascending order.
  std::vector<std::string> query_ids() const;

  std::size_t size() const noexcept { return size_; }

  /// Throws DataError listing qrel query ids missing from `queries`.
  void validate_against(const QuerySet& queries) const;

 private:
  std::map<std::string, std::map<std::string, int>, std::less<>> by_query_;
  std::size_t size_ = 0;
};

struct IngestOptions {
  bool allow_empty_text = false;
};

DocumentCollection load_documents(const std::filesystem::path& path,
                                  const IngestOptions& options = {});
QuerySet load_queries(const std::filesystem::path& path);
QrelSet load_qrels(const std::filesystem::path& path);
TrainingSet load_training_samples(const std::filesystem::path& path);

void write_documents(const std::filesystem::path& path, const DocumentCollection& docs);
void write_queries(const std::filesystem::path& path, const QuerySet& queries);
void write_qrels(const std::filesystem::path& path, const QrelSet& qrels);
void write_training_samples(const std::filesystem::path& path, const TrainingSet& samples);

/// Throws DataError unless |positives| >= 1 and positive ids are distinct.
void validate_sample(const TrainingSample& sample);

}  // namespace qrt
