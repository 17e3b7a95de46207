#include "qrt/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "qrt/error.hpp"
#include "qrt/io.hpp"

namespace qrt {

using nlohmann::json;

void RunFile::add(const std::string& query_id, const RankedList& ranking) {
  auto [it, inserted] = runs_.try_emplace(query_id);
  if (!inserted) throw DataError("run already has results for query " + query_id);
  std::size_t rank = 1;
  for (const auto& e : ranking.entries) it->second.push_back({e.doc_id, rank++, e.score});
}

const std::vector<RunEntry>& RunFile::results(std::string_view query_id) const {
  static const std::vector<RunEntry> kEmpty;
  auto it = runs_.find(query_id);
  return it == runs_.end() ? kEmpty : it->second;
}

RankedList RunFile::ranking(std::string_view query_id) const {
  RankedList out;
  for (const auto& e : results(query_id)) out.entries.push_back({e.doc_id, e.score});
  return out;
}

void write_trec_run(std::ostream& out, const RunFile& run, std::string_view tag) {
  std::ostringstream line;
  for (const auto& [qid, entries] : run.queries()) {
    for (const auto& e : entries) {
      out << qid << " Q0 " << e.doc_id << ' ' << e.rank << ' ' << std::setprecision(17)
          << e.score << ' ' << tag << '\n';
    }
  }
}

void write_trec_run(const std::filesystem::path& path, const RunFile& run, std::string_view tag) {
  auto out = open_output(path);
  write_trec_run(out, run, tag);
}

RunFile read_trec_run(const std::filesystem::path& path) {
  RunFile run;
  for_each_line(path, [&](std::size_t line_no, const std::string& line) {
    const std::string where = path.string() + ":" + std::to_string(line_no) + ": ";
    std::istringstream ss(line);
    std::string qid, q0, doc, tag, extra;
    std::size_t rank = 0;
    double score = 0.0;
    if (!(ss >> qid >> q0 >> doc >> rank >> score >> tag) || (ss >> extra)) {
      throw DataError(where + "expected `query_id Q0 doc_id rank score tag`");
    }
    run.runs_[qid].push_back({doc, rank, score});
  });
  for (auto& [qid, entries] : run.runs_) {
    std::sort(entries.begin(), entries.end(),
              [](const RunEntry& a, const RunEntry& b) { return a.rank < b.rank; });
    for (std::size_t i = 0; i < entries.size(); ++i) {
      if (entries[i].rank != i + 1) {
        throw DataError(path.string() + ": ranks for query " + qid + " are not 1.." +
                        std::to_string(entries.size()));
      }
      if (i > 0 && entries[i].score > entries[i - 1].score) {
        throw DataError(path.string() + ": scores for query " + qid +
                        " increase at rank " + std::to_string(i + 1));
      }
    }
  }
  return run;
}

double ndcg_at_k(const RankedList& ranking, const QrelSet& qrels, std::string_view query_id,
                 std::size_t k) {
  if (k == 0) throw std::invalid_argument("k must be >= 1");
  const auto& judged = qrels.judgments(query_id);
  std::vector<int> grades;
  for (const auto& [_, g] : judged) {
    if (g > 0) grades.push_back(g);
  }
  if (grades.empty()) return 0.0;
  std::sort(grades.begin(), grades.end(), std::greater<>());

  auto gain = [](int grade) { return std::exp2(static_cast<double>(grade)) - 1.0; };
  auto discount = [](std::size_t rank) { return std::log2(static_cast<double>(rank) + 1.0); };

  double idcg = 0.0;
  for (std::size_t i = 0; i < std::min(k, grades.size()); ++i) idcg += gain(grades[i]) / discount(i + 1);

  double dcg = 0.0;
  const std::size_t n = std::min(k, ranking.entries.size());
  for (std::size_t i = 0; i < n; ++i) {
    auto it = judged.find(ranking.entries[i].doc_id);
    if (it != judged.end() && it->second > 0) dcg += gain(it->second) / discount(i + 1);
  }
  return dcg / idcg;
}

EvalReport evaluate_run(const RunFile& run, const QrelSet& qrels, const EvalOptions& options) {
  EvalReport report;
  report.k = options.k;
  for (const auto& qid : qrels.query_ids()) {
    const auto ranking = run.ranking(qid);
    if (options.skip_unjudged) {
      const auto& judged = qrels.judgments(qid);
      const bool any_relevant = std::any_of(judged.begin(), judged.end(),
                                            [](const auto& kv) { return kv.second > 0; });
      if (ranking.entries.empty() || !any_relevant) continue;
    }
    report.per_query[qid] = ndcg_at_k(ranking, qrels, qid, options.k);
  }
  double total = 0.0;
  for (const auto& [_, v] : report.per_query) total += v;
  report.mean = report.per_query.empty() ? 0.0 : total / static_cast<double>(report.per_query.size());
  return report;
}

void write_report(const std::filesystem::path& path, const EvalReport& report) {
  json per_query = json::object();
  for (const auto& [qid, v] : report.per_query) per_query[qid] = v;
  auto out = open_output(path);
  out << json{{"k", report.k}, {"mean", report.mean}, {"per_query", std::move(per_query)}}.dump(2)
      << '\n';
}

EvalReport read_report(const std::filesystem::path& path) {
  try {
    const auto obj = json::parse(read_file(path));
    EvalReport report;
    report.k = obj.at("k").get<std::size_t>();
    report.mean = obj.at("mean").get<double>();
    for (const auto& [qid, v] : obj.at("per_query").items()) report.per_query[qid] = v.get<double>();
    return report;
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": malformed report: " + e.what());
  }
}

Comparison compare_runs(const EvalReport& a, const EvalReport& b) {
  if (a.k != b.k) {
    throw DataError("reports use different k (" + std::to_string(a.k) + " vs " +
                    std::to_string(b.k) + ")");
  }
  std::vector<std::string> only_a, only_b;
  for (const auto& [qid, _] : a.per_query) {
    if (!b.per_query.contains(qid)) only_a.push_back(qid);
  }
  for (const auto& [qid, _] : b.per_query) {
    if (!a.per_query.contains(qid)) only_b.push_back(qid);
  }
  if (!only_a.empty() || !only_b.empty()) {
    std::string msg = "query sets differ;";
    auto list = [&](const char* label, const std::vector<std::string>& ids) {
      if (ids.empty()) return;
      msg += std::string(" only in ") + label + ":";
      for (const auto& id : ids) msg += " " + id;
      msg += ";";
    };
    list("a", only_a);
    list("b", only_b);
    msg.pop_back();
    throw DataError(msg);
  }

  Comparison cmp;
  cmp.k = a.k;
  for (const auto& [qid, va] : a.per_query) {
    const double vb = b.per_query.at(qid);
    const double d = vb - va;
    cmp.rows.push_back({qid, va, vb, d});
    if (d > 0.0) {
      ++cmp.improved;
    } else if (d < 0.0) {
      ++cmp.degraded;
    } else {
      ++cmp.tied;
    }
    cmp.mean_a += va;
    cmp.mean_b += vb;
    cmp.mean_delta += d;
  }
  if (!cmp.rows.empty()) {
    const double n = static_cast<double>(cmp.rows.size());
    cmp.mean_a /= n;
    cmp.mean_b /= n;
    cmp.mean_delta /= n;
  }
  return cmp;
}

void print_comparison(std::ostream& out, const Comparison& cmp, std::string_view label_a,
                      std::string_view label_b) {
  std::size_t width = 5;
  for (const auto& r : cmp.rows) width = std::max(width, r.query_id.size());
  const auto col = std::max<std::size_t>({10, label_a.size(), label_b.size()}) + 2;
  const auto flags = out.flags();
  const auto precision = out.precision();
  out << std::left << std::setw(static_cast<int>(width + 2)) << "query" << std::right
      << std::setw(static_cast<int>(col)) << label_a << std::setw(static_cast<int>(col))
      << label_b << std::setw(static_cast<int>(col)) << "delta" << '\n';
  out << std::fixed << std::setprecision(4);
  auto row = [&](std::string_view id, double a, double b, double d) {
    out << std::left << std::setw(static_cast<int>(width + 2)) << id << std::right
        << std::setw(static_cast<int>(col)) << a << std::setw(static_cast<int>(col)) << b
        << std::setw(static_cast<int>(col)) << std::showpos << d << std::noshowpos << '\n';
  };
  for (const auto& r : cmp.rows) row(r.query_id, r.a, r.b, r.delta);
  row("mean", cmp.mean_a, cmp.mean_b, cmp.mean_delta);
  out << "nDCG@" << cmp.k << ": improved " << cmp.improved << ", degraded " << cmp.degraded
      << ", tied " << cmp.tied << '\n';
  out.flags(flags);
  out.precision(precision);
}

Rewriter identity_rewriter() {
  return [](const Query& q) { return q.text; };
}

Rewriter map_rewriter(std::map<std::string, std::string> rewrites) {
  return [rewrites = std::move(rewrites)](const Query& q) {
    auto it = rewrites.find(q.id);
    if (it == rewrites.end()) throw DataError("no rewrite for query id \"" + q.id + "\"");
    return it->second;
  };
}

std::map<std::string, std::string> load_rewrites(const std::filesystem::path& path) {
  std::map<std::string, std::string> out;
  for_each_line(path, [&](std::size_t line_no, const std::string& line) {
    const std::string where = path.string() + ":" + std::to_string(line_no) + ": ";
    try {
      const auto obj = json::parse(line);
      auto id = obj.at("id").get<std::string>();
      if (!out.emplace(id, obj.at("text").get<std::string>()).second) {
        throw DataError(where + "duplicate rewrite for id \"" + id + "\"");
      }
    } catch (const json::exception& e) {
      throw DataError(where + "invalid rewrite record: " + e.what());
    }
  });
  return out;
}

RunFile rewrite_and_retrieve(const QuerySet& queries, const Rewriter& rewriter,
                             const InvertedIndex& index, std::size_t k,
                             const Bm25Params& params) {
  RunFile run;
  for (const auto& q : queries) run.add(q.id, index.search(rewriter(q), k, params));
  return run;
}

}  // namespace qrt
