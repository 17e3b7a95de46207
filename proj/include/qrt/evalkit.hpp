#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "qrt/bm25.hpp"
#include "qrt/corpus.hpp"

namespace qrt {

struct RunEntry {
  std::string doc_id;
  std::size_t rank;  // 1-based
  double score;

  friend bool operator==(const RunEntry&, const RunEntry&) = default;
};

/// Ranked results per query. Ranks are 1..n and scores non-increasing.
class RunFile {
 public:
  /// Throws DataError if the query already has results.
  void add(const std::string& query_id, const RankedList& ranking);

  const std::map<std::string, std::vector<RunEntry>, std::less<>>& queries() const noexcept { return runs_; }
  /// Empty when the query has no results.
  const std::vector<RunEntry>& results(std::string_view query_id) const;
  RankedList ranking(std::string_view query_id) const;

  friend bool operator==(const RunFile&, const RunFile&) = default;

 private:
  friend RunFile read_trec_run(const std::filesystem::path& path);
  std::map<std::string, std::vector<RunEntry>, std::less<>> runs_;
};

/// TREC 6-column format: `query_id Q0 doc_id rank score tag`.
void write_trec_run(std::ostream& out, const RunFile& run, std::string_view tag = "qrt");
void write_trec_run(const std::filesystem::path& path, const RunFile& run,
                    std::string_view tag = "qrt");
RunFile read_trec_run(const std::filesystem::path& path);

/// nDCG@k with gain 2^rel - 1 and discount log2(rank + 1). IDCG uses the
/// query's full judged grade multiset; 0 when the query has no relevant
/// documents.
double ndcg_at_k(const RankedList& ranking, const QrelSet& qrels, std::string_view query_id,
                 std::size_t k);

struct EvalReport {
  std::size_t k = 10;
  std::map<std::string, double> per_query;
  double mean = 0.0;

  std::size_t query_count() const noexcept { return per_query.size(); }
};

struct EvalOptions {
  std::size_t k = 10;
  /// Exclude queries with no results or no relevant judgments instead of
  /// scoring them 0.
  bool skip_unjudged = false;
};

/// Scores every query in `qrels`; queries absent from the run score 0.
EvalReport evaluate_run(const RunFile& run, const QrelSet& qrels, const EvalOptions& options = {});

/// {"k": k, "mean": m, "per_query": {id: value}}
void write_report(const std::filesystem::path& path, const EvalReport& report);
EvalReport read_report(const std::filesystem::path& path);

struct ComparisonRow {
  std::string query_id;
  double a;
  double b;
  double delta;  // b - a
};

struct Comparison {
  std::size_t k = 10;
  std::vector<ComparisonRow> rows;
  double mean_a = 0.0;
  double mean_b = 0.0;
  double mean_delta = 0.0;
  std::size_t improved = 0;
  std::size_t degraded = 0;
  std::size_t tied = 0;
};

/// Per-query and mean deltas b - a. Throws DataError when k differs or the
/// query sets differ (message lists the symmetric difference).
Comparison compare_runs(const EvalReport& a, const EvalReport& b);

/// Aligned-column table of a comparison.
void print_comparison(std::ostream& out, const Comparison& cmp, std::string_view label_a = "a",
                      std::string_view label_b = "b");

/// Maps a query to the text sent to the retriever.
using Rewriter = std::function<std::string(const Query&)>;

Rewriter identity_rewriter();

/// Looks rewrites up by query id; throws DataError naming a missing id.
Rewriter map_rewriter(std::map<std::string, std::string> rewrites);

/// JSON lines {"id", "text"}; duplicate ids are data errors.
std::map<std::string, std::string> load_rewrites(const std::filesystem::path& path);

/// Rewrites every query and runs BM25 top-k over the index.
RunFile rewrite_and_retrieve(const QuerySet& queries, const Rewriter& rewriter,
                             const InvertedIndex& index, std::size_t k,
                             const Bm25Params& params = {});

}  // namespace qrt
