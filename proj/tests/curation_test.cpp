#include "qrt/curation.hpp"

#include <gtest/gtest.h>

#include "qrt/error.hpp"
#include "test_support.hpp"

using qrt::CategoryCaps;
using qrt::QAAnswer;
using qrt::QARecord;

namespace {

QARecord record(std::string id, std::string category, std::string selected,
                std::string question = "how do owls see at night") {
  QARecord r;
  r.question_id = std::move(id);
  r.question_text = std::move(question);
  r.category = std::move(category);
  r.answers.push_back({"an unselected answer", false, true});
  if (!selected.empty()) r.answers.push_back({std::move(selected), true, true});
  else r.answers.push_back({"another answer", false, true});
  return r;
}

std::vector<QARecord> many(std::size_t n, const std::string& category) {
  std::vector<QARecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(record(category + std::to_string(i), category, "answer " + std::to_string(i)));
  }
  return out;
}

}  // namespace

TEST(TextOnly, PlainTextKept) {
  const std::vector<QARecord> recs{record("1", "biology", "rods in the retina")};
  EXPECT_EQ(qrt::filter_records(recs).size(), 1u);
}

TEST(TextOnly, BareImageSelectedAnswerDropped) {
  const std::vector<QARecord> recs{record("1", "biology", "<img src=\"eye.png\">"),
                                   record("2", "biology", "![](http://x/eye.png)")};
  EXPECT_TRUE(qrt::filter_records(recs).empty());
}

TEST(TextOnly, ImageWithExplanationKept) {
  EXPECT_TRUE(qrt::is_text_only("The retina has rods, see <img src=\"a.png\"> for a diagram"));
  EXPECT_FALSE(qrt::is_text_only("  <img src=\"a.png\">  "));
}

TEST(TextOnly, CustomMarkers) {
  qrt::TextOnlyOptions opts;
  opts.markers = {"[video]"};
  EXPECT_TRUE(qrt::is_text_only("<img src=\"a.png\">", opts));
}

TEST(TextOnly, EmptyStream) { EXPECT_TRUE(qrt::filter_records({}).empty()); }

TEST(V2, CapIsReproducible) {
  const auto recs = many(10, "biology");
  const CategoryCaps caps{{"biology", 3}};
  const auto a = qrt::build_v2(recs, caps, 11);
  const auto b = qrt::build_v2(recs, caps, 11);
  ASSERT_EQ(a.samples.size(), 3u);
  EXPECT_EQ(a.samples, b.samples);
  for (const auto& s : a.samples) {
    EXPECT_EQ(s.category, "biology");
    ASSERT_EQ(s.positives.size(), 1u);
  }
}

TEST(V2, SeedChangesSelection) {
  const auto recs = many(40, "biology");
  const CategoryCaps caps{{"biology", 5}};
  EXPECT_NE(qrt::build_v2(recs, caps, 1).samples, qrt::build_v2(recs, caps, 2).samples);
}

TEST(V2, SamplesKeepStreamOrder) {
  const auto recs = many(30, "math");
  const auto out = qrt::build_v2(recs, {{"math", 7}}, 3);
  for (std::size_t i = 1; i < out.samples.size(); ++i) {
    const auto prev = std::stoi(out.samples[i - 1].query.id.substr(4));
    const auto cur = std::stoi(out.samples[i].query.id.substr(4));
    EXPECT_LT(prev, cur);
  }
}

TEST(V2, RecordWithoutSelectedAnswerExcluded) {
  std::vector<QARecord> recs{record("1", "physics", ""), record("2", "physics", "gravity")};
  const auto out = qrt::build_v2(recs, {{"physics", 10}}, 0);
  ASSERT_EQ(out.samples.size(), 1u);
  EXPECT_EQ(out.samples[0].query.id, "2");
  EXPECT_EQ(out.samples[0].positives[0].text, "gravity");
}

TEST(V2, CapIsAnUpperBound) {
  const auto recs = many(40, "economics");
  EXPECT_EQ(qrt::build_v2(recs, {{"economics", 1500}}, 0).samples.size(), 40u);
}

TEST(V2, UncappedCategoriesIgnoredAndEmptyCategoriesWarned) {
  auto recs = many(4, "physics");
  const auto extra = many(4, "cooking");
  recs.insert(recs.end(), extra.begin(), extra.end());
  const auto out = qrt::build_v2(recs, {{"physics", 10}, {"math", 10}}, 0);
  EXPECT_EQ(out.samples.size(), 4u);
  ASSERT_EQ(out.warnings.size(), 1u);
  EXPECT_NE(out.warnings[0].find("math"), std::string::npos);
}

TEST(V2, DefaultCaps) {
  const auto caps = qrt::default_v2_caps();
  EXPECT_EQ(caps.size(), 17u);
  for (const auto& [_, cap] : caps) EXPECT_EQ(cap, 1500u);
  const auto v1 = qrt::default_v1_caps();
  EXPECT_EQ(v1.size(), 9u);
  for (const auto& [_, cap] : v1) EXPECT_EQ(cap, 1200u);
}

TEST(V1, AllWithGeneratedAnswers) {
  const auto recs = many(5, "biology");
  std::map<std::string, std::string> gen;
  for (const auto& r : recs) gen[r.question_id] = "generated " + r.question_id;
  const auto out = qrt::build_v1(recs, gen, {{"biology", 1200}}, 0);
  ASSERT_EQ(out.samples.size(), 5u);
  EXPECT_EQ(out.samples[2].positives[0].text, "generated biology2");
  EXPECT_TRUE(out.warnings.empty());
}

TEST(V1, MissingGeneratedAnswerSkippedWithWarning) {
  const auto recs = many(3, "biology");
  const std::map<std::string, std::string> gen{{"biology0", "x"}, {"biology2", "z"}};
  const auto out = qrt::build_v1(recs, gen, {{"biology", 10}}, 0);
  EXPECT_EQ(out.samples.size(), 2u);
  ASSERT_EQ(out.warnings.size(), 1u);
  EXPECT_NE(out.warnings[0].find("biology1"), std::string::npos);
}

TEST(V1, Deterministic) {
  const auto recs = many(50, "cs");
  std::map<std::string, std::string> gen;
  for (const auto& r : recs) gen[r.question_id] = "g";
  EXPECT_EQ(qrt::build_v1(recs, gen, {{"cs", 9}}, 4).samples,
            qrt::build_v1(recs, gen, {{"cs", 9}}, 4).samples);
}

TEST(Loading, RecordsAndErrors) {
  qrt::testing::TempDir dir;
  qrt::testing::write_text(
      dir / "r.jsonl",
      R"({"question_id":"7","question":"q","category":"math","answers":[{"text":"a","selected":true},{"text":"b","selected":true}]})"
      "\n"
      R"({"question_id":8,"question":"q2","category":"math","answers":[{"text":"a"},{"text":"b"}]})"
      "\n");
  const auto loaded = qrt::load_qa_records(dir / "r.jsonl");
  ASSERT_EQ(loaded.records.size(), 2u);
  EXPECT_EQ(loaded.records[1].question_id, "8");
  EXPECT_EQ(loaded.records[1].selected_answer(), nullptr);
  ASSERT_EQ(loaded.warnings.size(), 1u);
  EXPECT_EQ(loaded.records[0].selected_answer()->text, "a");

  qrt::testing::write_text(
      dir / "one.jsonl",
      R"({"question_id":"1","question":"q","category":"math","answers":[{"text":"a"}]})");
  EXPECT_THROW(qrt::load_qa_records(dir / "one.jsonl"), qrt::DataError);
}

TEST(Loading, CapsKeepFileOrder) {
  qrt::testing::TempDir dir;
  qrt::testing::write_text(dir / "caps.json", R"({"physics": 3, "biology": 2})");
  const auto caps = qrt::load_caps(dir / "caps.json");
  EXPECT_EQ(caps, (CategoryCaps{{"physics", 3}, {"biology", 2}}));
  qrt::testing::write_text(dir / "bad.json", R"({"physics": 0})");
  EXPECT_THROW(qrt::load_caps(dir / "bad.json"), qrt::DataError);
}

TEST(Loading, GeneratedAnswers) {
  qrt::testing::TempDir dir;
  qrt::testing::write_text(dir / "g.jsonl",
                           "{\"question_id\":\"1\",\"text\":\"a\"}\n{\"question_id\":2,\"text\":\"b\"}\n");
  const auto gen = qrt::load_generated_answers(dir / "g.jsonl");
  EXPECT_EQ(gen.at("2"), "b");
}
