#include "qrt/curation.hpp"

#include <algorithm>
#include <regex>
#include <set>
#include <unordered_map>

#include <json.hpp>

#include "qrt/error.hpp"
#include "qrt/hashing.hpp"
#include "qrt/io.hpp"
#include "qrt/random.hpp"

namespace qrt {

using nlohmann::json;

const QAAnswer* QARecord::selected_answer() const {
  for (const auto& a : answers) {
    if (a.is_selected) return &a;
  }
  return nullptr;
}

QALoadResult load_qa_records(const std::filesystem::path& path) {
  QALoadResult out;
  std::set<std::string> ids;
  for_each_line(path, [&](std::size_t line_no, const std::string& line) {
    const std::string where = path.string() + ":" + std::to_string(line_no) + ": ";
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError(where + "malformed JSON: " + e.what());
    }
    QARecord rec;
    try {
      rec.question_id = obj.at("question_id").is_string()
                            ? obj.at("question_id").get<std::string>()
                            : obj.at("question_id").dump();
      rec.question_text = obj.at("question").get<std::string>();
      rec.category = obj.at("category").get<std::string>();
      for (const auto& a : obj.at("answers")) {
        QAAnswer ans;
        ans.text = a.at("text").get<std::string>();
        ans.is_selected = a.value("selected", false);
        rec.answers.push_back(std::move(ans));
      }
    } catch (const json::exception& e) {
      throw DataError(where + "invalid record: " + e.what());
    }
    if (rec.question_id.empty()) throw DataError(where + "empty question_id");
    if (rec.answers.size() < 2) {
      throw DataError(where + "question " + rec.question_id + " has fewer than two answers");
    }
    if (!ids.insert(rec.question_id).second) {
      throw DataError(where + "duplicate question_id " + rec.question_id);
    }
    const auto selected = std::count_if(rec.answers.begin(), rec.answers.end(),
                                        [](const QAAnswer& a) { return a.is_selected; });
    if (selected > 1) {
      out.warnings.push_back("question " + rec.question_id + " has " + std::to_string(selected) +
                             " selected answers; using the first");
    }
    out.records.push_back(std::move(rec));
  });
  return out;
}

namespace {

CategoryCaps with_cap(std::initializer_list<const char*> names, std::size_t cap) {
  CategoryCaps caps;
  for (const char* n : names) caps.emplace_back(n, cap);
  return caps;
}

}  // namespace

CategoryCaps default_v1_caps() {
  return with_cap({"biology", "chemistry", "codereview", "cs", "earthscience", "economics", "math",
                   "physics", "robotics"},
                  1200);
}

CategoryCaps default_v2_caps() {
  return with_cap({"ai", "biology", "chemistry", "codereview", "cs", "earthscience", "economics",
                   "computergraphics", "math", "mathoverflow", "philosophy", "physics", "robotics",
                   "stackoverflow", "sustainability", "softwareengineering", "bioinformatics"},
                  1500);
}

CategoryCaps load_caps(const std::filesystem::path& path) {
  nlohmann::ordered_json obj;
  try {
    obj = nlohmann::ordered_json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": malformed caps file: " + e.what());
  }
  if (!obj.is_object()) throw DataError(path.string() + ": caps must be a JSON object");
  CategoryCaps caps;
  for (const auto& [category, cap] : obj.items()) {
    if (!cap.is_number_integer() || cap.get<long long>() < 1) {
      throw DataError(path.string() + ": cap for \"" + category + "\" must be an integer >= 1");
    }
    caps.emplace_back(category, cap.get<std::size_t>());
  }
  return caps;
}

bool is_text_only(std::string_view text, const TextOnlyOptions& options) {
  const bool marked = std::any_of(options.markers.begin(), options.markers.end(),
                                  [&](const std::string& m) {
                                    return text.find(m) != std::string_view::npos;
                                  });
  if (!marked) return true;
  static const std::regex kMarkup(R"(!?\[[^\]]*\]\([^)]*\)|<[^>]*>|https?://\S+)");
  const std::string rest = std::regex_replace(std::string(text), kMarkup, " ");
  return rest.find_first_not_of(" \t\r\n") != std::string::npos;
}

std::vector<QARecord> filter_records(std::span<const QARecord> records,
                                     const TextOnlyOptions& options) {
  std::vector<QARecord> out;
  for (const auto& r : records) {
    QARecord copy = r;
    for (auto& a : copy.answers) a.is_text_only = is_text_only(a.text, options);
    const QAAnswer* selected = copy.selected_answer();
    if (!is_text_only(copy.question_text, options)) continue;
    if (selected != nullptr && !selected->is_text_only) continue;
    out.push_back(std::move(copy));
  }
  return out;
}

namespace {

/// Seeded reservoir sample (Algorithm R) of up to `cap` indices per category,
/// returned in stream order.
std::vector<std::size_t> reservoir(std::span<const QARecord> records, const std::string& category,
                                   std::size_t cap, std::uint64_t seed,
                                   const std::function<bool(const QARecord&)>& eligible) {
  Rng rng(derive_seed(seed, fnv1a64(category)));
  std::vector<std::size_t> chosen;
  std::size_t seen = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].category != category || !eligible(records[i])) continue;
    ++seen;
    if (chosen.size() < cap) {
      chosen.push_back(i);
    } else {
      const std::size_t j = rng.below(seen);
      if (j < cap) chosen[j] = i;
    }
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

void warn_unknown_categories(std::span<const QARecord> records, const CategoryCaps& caps,
                             std::vector<std::string>& warnings) {
  std::set<std::string_view> present;
  for (const auto& r : records) present.insert(r.category);
  for (const auto& [category, _] : caps) {
    if (!present.contains(category)) {
      warnings.push_back("category \"" + category + "\" has no records");
    }
  }
}

void check_caps(const CategoryCaps& caps) {
  for (const auto& [category, cap] : caps) {
    if (cap < 1) throw UsageError("cap for \"" + category + "\" must be >= 1");
  }
}

TrainingSample make_sample(const QARecord& r, std::string positive) {
  TrainingSample s;
  s.query = {r.question_id, r.question_text};
  s.positives.push_back({r.question_id + "-a", std::move(positive)});
  s.category = r.category;
  return s;
}

}  // namespace

CurationResult build_v2(std::span<const QARecord> records, const CategoryCaps& caps,
                        std::uint64_t seed) {
  check_caps(caps);
  CurationResult out;
  warn_unknown_categories(records, caps, out.warnings);
  for (const auto& [category, cap] : caps) {
    const auto chosen = reservoir(records, category, cap, seed, [](const QARecord& r) {
      return r.selected_answer() != nullptr;
    });
    for (auto i : chosen) {
      out.samples.push_back(make_sample(records[i], records[i].selected_answer()->text));
    }
  }
  return out;
}

CurationResult build_v1(std::span<const QARecord> records,
                        const std::map<std::string, std::string>& generated_answers,
                        const CategoryCaps& caps, std::uint64_t seed) {
  check_caps(caps);
  CurationResult out;
  warn_unknown_categories(records, caps, out.warnings);
  for (const auto& [category, cap] : caps) {
    const auto chosen =
        reservoir(records, category, cap, seed, [](const QARecord&) { return true; });
    for (auto i : chosen) {
      auto it = generated_answers.find(records[i].question_id);
      if (it == generated_answers.end()) {
        out.warnings.push_back("question " + records[i].question_id +
                               " has no generated answer; skipped");
        continue;
      }
      out.samples.push_back(make_sample(records[i], it->second));
    }
  }
  return out;
}

std::map<std::string, std::string> load_generated_answers(const std::filesystem::path& path) {
  std::map<std::string, std::string> out;
  for_each_line(path, [&](std::size_t line_no, const std::string& line) {
    const std::string where = path.string() + ":" + std::to_string(line_no) + ": ";
    try {
      const auto obj = json::parse(line);
      const auto& id = obj.at("question_id");
      std::string key = id.is_string() ? id.get<std::string>() : id.dump();
      if (!out.emplace(key, obj.at("text").get<std::string>()).second) {
        throw DataError(where + "duplicate question_id " + key);
      }
    } catch (const json::exception& e) {
      throw DataError(where + "invalid generated answer: " + e.what());
    }
  });
  return out;
}

}  // namespace qrt
