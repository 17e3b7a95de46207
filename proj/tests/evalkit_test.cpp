#include "qrt/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <gtest/gtest.h>

#include "qrt/error.hpp"
#include "test_support.hpp"

using qrt::EvalReport;
using qrt::QrelSet;
using qrt::RankedList;

namespace {

RankedList ranking(std::initializer_list<const char*> ids) {
  RankedList r;
  double score = 100.0;
  for (const char* id : ids) r.entries.push_back({id, score--});
  return r;
}

// Textbook nDCG@k with gain 2^g - 1 and discount log2(rank + 1).
double oracle_ndcg(const std::vector<int>& grades_in_rank_order, std::vector<int> all_grades,
                   std::size_t k) {
  auto dcg = [k](const std::vector<int>& g) {
    double s = 0.0;
    for (std::size_t i = 0; i < std::min(k, g.size()); ++i) {
      s += (std::pow(2.0, g[i]) - 1.0) / std::log2(static_cast<double>(i) + 2.0);
    }
    return s;
  };
  std::sort(all_grades.rbegin(), all_grades.rend());
  const double ideal = dcg(all_grades);
  return ideal == 0.0 ? 0.0 : dcg(grades_in_rank_order) / ideal;
}

EvalReport report(std::size_t k, std::map<std::string, double> per_query) {
  EvalReport r;
  r.k = k;
  r.per_query = std::move(per_query);
  double s = 0.0;
  for (const auto& [_, v] : r.per_query) s += v;
  r.mean = s / static_cast<double>(r.per_query.size());
  return r;
}

}  // namespace

TEST(Ndcg, IdealBinaryRankingIsOne) {
  QrelSet q;
  q.add("q", "a", 1);
  q.add("q", "b", 1);
  EXPECT_EQ(qrt::ndcg_at_k(ranking({"b", "a", "x"}), q, "q", 10), 1.0);
}

TEST(Ndcg, SingleRelevantAtRankThree) {
  QrelSet q;
  q.add("q", "c", 1);
  const double expected = (1.0 / std::log2(4.0)) / (1.0 / std::log2(2.0));
  EXPECT_EQ(expected, 0.5);
  EXPECT_EQ(qrt::ndcg_at_k(ranking({"a", "b", "c"}), q, "q", 10), 0.5);
}

TEST(Ndcg, NoRelevantDocsIsZero) {
  QrelSet q;
  q.add("q", "a", 0);
  EXPECT_EQ(qrt::ndcg_at_k(ranking({"a"}), q, "q", 10), 0.0);
  EXPECT_EQ(qrt::ndcg_at_k(ranking({"a"}), q, "other", 10), 0.0);
}

TEST(Ndcg, CutoffApplies) {
  QrelSet q;
  q.add("q", "c", 1);
  EXPECT_EQ(qrt::ndcg_at_k(ranking({"a", "b", "c"}), q, "q", 2), 0.0);
  EXPECT_THROW(qrt::ndcg_at_k(ranking({"a"}), q, "q", 0), std::invalid_argument);
}

TEST(Ndcg, AllPermutationsOfSixCandidates) {
  // Graded judgments; one candidate unjudged, one judged irrelevant.
  const std::vector<std::string> ids{"a", "b", "c", "d", "e", "f"};
  const std::map<std::string, int> grades{{"a", 3}, {"b", 2}, {"c", 2}, {"d", 1}, {"e", 0}};
  QrelSet q;
  for (const auto& [id, g] : grades) q.add("q", id, g);
  std::vector<int> all;
  for (const auto& [_, g] : grades) all.push_back(g);

  std::vector<std::size_t> perm(6);
  std::iota(perm.begin(), perm.end(), 0);
  std::size_t count = 0, ideal = 0;
  for (std::size_t k : {std::size_t{3}, std::size_t{10}}) {
    do {
      RankedList r;
      std::vector<int> in_order;
      for (std::size_t i = 0; i < 6; ++i) {
        const auto& id = ids[perm[i]];
        r.entries.push_back({id, 6.0 - static_cast<double>(i)});
        in_order.push_back(grades.contains(id) ? grades.at(id) : 0);
      }
      const double got = qrt::ndcg_at_k(r, q, "q", k);
      EXPECT_GE(got, 0.0);
      EXPECT_LE(got, 1.0 + 1e-15);
      EXPECT_NEAR(got, oracle_ndcg(in_order, all, k), 1e-12);
      if (got == 1.0) ++ideal;
      ++count;
    } while (std::next_permutation(perm.begin(), perm.end()));
  }
  EXPECT_EQ(count, 1440u);
  // k=10: a, {b, c}, d, {e, f} gives 2*2 ideal orders. k=3: a, {b, c}, then any
  // order of the remaining three gives 2*6.
  EXPECT_EQ(ideal, 4u + 12u);
}

TEST(EvaluateRun, IdealRunScoresOne) {
  QrelSet q;
  q.add("q1", "a", 1);
  q.add("q2", "b", 2);
  qrt::RunFile run;
  run.add("q1", ranking({"a", "x"}));
  run.add("q2", ranking({"b"}));
  const auto rep = qrt::evaluate_run(run, q);
  EXPECT_EQ(rep.mean, 1.0);
  EXPECT_EQ(rep.query_count(), 2u);
}

TEST(EvaluateRun, MeanOfPerQuery) {
  QrelSet q;
  q.add("q1", "c", 1);
  q.add("q2", "a", 1);
  qrt::RunFile run;
  run.add("q1", ranking({"a", "b", "c"}));
  run.add("q2", ranking({"a"}));
  const auto rep = qrt::evaluate_run(run, q);
  EXPECT_EQ(rep.per_query.at("q1"), 0.5);
  EXPECT_EQ(rep.mean, 0.75);
}

TEST(EvaluateRun, MissingQueryContributesZero) {
  QrelSet q;
  q.add("q1", "a", 1);
  q.add("q2", "a", 1);
  qrt::RunFile run;
  run.add("q1", ranking({"a"}));
  const auto rep = qrt::evaluate_run(run, q);
  EXPECT_EQ(rep.per_query.at("q2"), 0.0);
  EXPECT_EQ(rep.mean, 0.5);
}

TEST(EvaluateRun, SkipUnjudgedDropsQueriesWithoutRelevantDocs) {
  QrelSet q;
  q.add("q1", "a", 1);
  q.add("q2", "a", 0);
  qrt::RunFile run;
  run.add("q1", ranking({"a"}));
  run.add("q2", ranking({"a"}));
  qrt::EvalOptions opts;
  opts.skip_unjudged = true;
  const auto rep = qrt::evaluate_run(run, q, opts);
  EXPECT_EQ(rep.query_count(), 1u);
  EXPECT_EQ(rep.mean, 1.0);
  EXPECT_EQ(qrt::evaluate_run(run, q).mean, 0.5);
}

TEST(Compare, IdenticalReportsTie) {
  const auto a = report(10, {{"q1", 0.5}, {"q2", 0.25}});
  const auto cmp = qrt::compare_runs(a, a);
  EXPECT_EQ(cmp.tied, 2u);
  EXPECT_EQ(cmp.mean_delta, 0.0);
  for (const auto& row : cmp.rows) EXPECT_EQ(row.delta, 0.0);
}

TEST(Compare, UniformImprovement) {
  const auto a = report(10, {{"q1", 0.5}, {"q2", 0.25}, {"q3", 0.0}});
  const auto b = report(10, {{"q1", 0.6}, {"q2", 0.35}, {"q3", 0.1}});
  const auto cmp = qrt::compare_runs(a, b);
  EXPECT_EQ(cmp.improved, 3u);
  EXPECT_NEAR(cmp.mean_delta, 0.1, 1e-12);
}

TEST(Compare, MismatchedQuerySetsListed) {
  const auto a = report(10, {{"q1", 0.5}, {"q2", 0.25}});
  const auto b = report(10, {{"q1", 0.5}, {"q3", 0.25}});
  try {
    qrt::compare_runs(a, b);
    FAIL() << "expected DataError";
  } catch (const qrt::DataError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("q2"), std::string::npos) << msg;
    EXPECT_NE(msg.find("q3"), std::string::npos) << msg;
  }
  EXPECT_THROW(qrt::compare_runs(a, report(5, {{"q1", 0.5}, {"q2", 0.25}})), qrt::DataError);
}

TEST(Compare, PrintsTable) {
  const auto a = report(10, {{"q1", 0.5}});
  const auto b = report(10, {{"q1", 0.75}});
  std::ostringstream out;
  qrt::print_comparison(out, qrt::compare_runs(a, b), "base", "new");
  EXPECT_NE(out.str().find("base"), std::string::npos);
  EXPECT_NE(out.str().find("q1"), std::string::npos);
}

TEST(TrecRun, RoundTrip) {
  qrt::testing::TempDir dir;
  qrt::RunFile run;
  run.add("q1", ranking({"a", "b"}));
  run.add("q2", RankedList{{{"c", 1.0 / 3.0}, {"d", 0.1 + 0.2}}});
  qrt::write_trec_run(dir / "run.trec", run, "test");
  const auto text = qrt::testing::slurp(dir / "run.trec");
  EXPECT_EQ(text.substr(0, text.find('\n')), "q1 Q0 a 1 100 test");
  EXPECT_EQ(qrt::read_trec_run(dir / "run.trec"), run);
}

TEST(TrecRun, MalformedRejected) {
  qrt::testing::TempDir dir;
  qrt::testing::write_text(dir / "gap.trec", "q1 Q0 a 1 2.0 t\nq1 Q0 b 3 1.0 t\n");
  qrt::testing::write_text(dir / "order.trec", "q1 Q0 a 1 1.0 t\nq1 Q0 b 2 2.0 t\n");
  qrt::testing::write_text(dir / "cols.trec", "q1 Q0 a 1\n");
  EXPECT_THROW(qrt::read_trec_run(dir / "gap.trec"), qrt::DataError);
  EXPECT_THROW(qrt::read_trec_run(dir / "order.trec"), qrt::DataError);
  EXPECT_THROW(qrt::read_trec_run(dir / "cols.trec"), qrt::DataError);
}

TEST(Report, RoundTrip) {
  qrt::testing::TempDir dir;
  const auto r = report(10, {{"q1", 1.0 / 3.0}, {"q2", 0.5}});
  qrt::write_report(dir / "r.json", r);
  const auto back = qrt::read_report(dir / "r.json");
  EXPECT_EQ(back.k, r.k);
  EXPECT_EQ(back.per_query, r.per_query);
  EXPECT_EQ(back.mean, r.mean);
}

TEST(Rewrite, IdentityEqualsPlainRetrieval) {
  const auto index = qrt::InvertedIndex::build(qrt::testing::fixture_corpus());
  qrt::QuerySet queries;
  const auto texts = qrt::testing::fixture_queries();
  for (std::size_t i = 0; i < texts.size(); ++i) queries.add({"q" + std::to_string(i), texts[i]});
  const auto run = qrt::rewrite_and_retrieve(queries, qrt::identity_rewriter(), index, 10);
  for (const auto& q : queries) EXPECT_EQ(run.ranking(q.id), index.search(q.text, 10)) << q.id;
}

TEST(Rewrite, MapRewriterMissingIdNamed) {
  qrt::QuerySet queries;
  queries.add({"q1", "owls"});
  queries.add({"q2", "bats"});
  const auto rw = qrt::map_rewriter({{"q1", "night owls"}});
  EXPECT_EQ(rw(queries[0]), "night owls");
  try {
    rw(queries[1]);
    FAIL() << "expected DataError";
  } catch (const qrt::DataError& e) {
    EXPECT_NE(std::string(e.what()).find("q2"), std::string::npos);
  }
}

TEST(Rewrite, ExpansionTermsImproveNdcg) {
  // Gold docs contain terms that the original queries lack.
  qrt::DocumentCollection docs;
  docs.add({"g1", "owls nocturnal retina rods"});
  docs.add({"g2", "bats ultrasonic cochlea"});
  docs.add({"n1", "owls owls feathers"});
  docs.add({"n2", "bats bats caves"});
  docs.add({"n3", "owls bats forest"});
  const auto index = qrt::InvertedIndex::build(docs);
  qrt::QuerySet queries;
  queries.add({"q1", "owls"});
  queries.add({"q2", "bats"});
  QrelSet qrels;
  qrels.add("q1", "g1", 1);
  qrels.add("q2", "g2", 1);
  const auto base = qrt::evaluate_run(
      qrt::rewrite_and_retrieve(queries, qrt::identity_rewriter(), index, 10), qrels);
  const auto rw = qrt::map_rewriter({{"q1", "owls retina rods"}, {"q2", "bats cochlea"}});
  const auto better = qrt::evaluate_run(qrt::rewrite_and_retrieve(queries, rw, index, 10), qrels);
  EXPECT_GT(better.mean, base.mean);
  EXPECT_EQ(better.mean, 1.0);
}

TEST(Rewrite, LoadRewritesFile) {
  qrt::testing::TempDir dir;
  qrt::testing::write_text(dir / "rw.jsonl",
                           "{\"id\":\"q1\",\"text\":\"a\"}\n{\"id\":\"q1\",\"text\":\"b\"}\n");
  EXPECT_THROW(qrt::load_rewrites(dir / "rw.jsonl"), qrt::DataError);
  EXPECT_THROW(qrt::load_rewrites(dir / "missing.jsonl"), qrt::DataError);
}
