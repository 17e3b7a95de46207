#include "qrt/corpus.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include <json.hpp>

#include "qrt/error.hpp"
#include "qrt/io.hpp"

namespace qrt {

using nlohmann::json;

template <typename Record>
void Collection<Record>::add(Record record) {
  if (record.id.empty()) throw DataError("record with empty id");
  auto [it, inserted] = by_id_.emplace(record.id, records_.size());
  if (!inserted) throw DataError("duplicate id \"" + record.id + "\"");
  records_.push_back(std::move(record));
}

template <typename Record>
const Record* Collection<Record>::find(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  return it == by_id_.end() ? nullptr : &records_[it->second];
}

template class Collection<Document>;
template class Collection<Query>;

void QrelSet::add(std::string query_id, std::string doc_id, int grade) {
  if (grade < 0) {
    throw DataError("negative grade " + std::to_string(grade) + " for (" + query_id + ", " +
                    doc_id + ")");
  }
  auto& docs = by_query_[query_id];
  if (!docs.emplace(doc_id, grade).second) {
    throw DataError("duplicate judgment for (" + query_id + ", " + doc_id + ")");
  }
  ++size_;
}

int QrelSet::grade(std::string_view query_id, std::string_view doc_id) const {
  auto q = by_query_.find(query_id);
  if (q == by_query_.end()) return 0;
  auto d = q->second.find(std::string(doc_id));
  return d == q->second.end() ? 0 : d->second;
}

const std::map<std::string, int>& QrelSet::judgments(std::string_view query_id) const {
  static const std::map<std::string, int> kEmpty;
  auto q = by_query_.find(query_id);
  return q == by_query_.end() ? kEmpty : q->second;
}

std::vector<std::string> QrelSet::query_ids() const {
  std::vector<std::string> ids;
  ids.reserve(by_query_.size());
  for (const auto& [id, _] : by_query_) ids.push_back(id);
  return ids;
}

void QrelSet::validate_against(const QuerySet& queries) const {
  std::string missing;
  for (const auto& [id, _] : by_query_) {
    if (queries.find(id) == nullptr) missing += (missing.empty() ? "" : ", ") + id;
  }
  if (!missing.empty()) throw DataError("qrels reference unknown queries: " + missing);
}

namespace {

json parse_json_line(const std::filesystem::path& path, std::size_t line_no,
                     const std::string& line) {
  try {
    json obj = json::parse(line);
    if (!obj.is_object()) throw DataError("expected a JSON object");
    return obj;
  } catch (const json::exception& e) {
    throw DataError(path.string() + ":" + std::to_string(line_no) + ": malformed JSON: " +
                    e.what());
  } catch (const DataError& e) {
    throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
  }
}

std::string string_field(const json& obj, const char* key, const std::filesystem::path& path,
                         std::size_t line_no) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) {
    throw DataError(path.string() + ":" + std::to_string(line_no) + ": missing string field \"" +
                    key + "\"");
  }
  return it->get<std::string>();
}

template <typename Record>
Collection<Record> load_id_text(const std::filesystem::path& path, bool allow_empty_text) {
  Collection<Record> out;
  for_each_line(path, [&](std::size_t line_no, const std::string& line) {
    json obj = parse_json_line(path, line_no, line);
    Record r{string_field(obj, "id", path, line_no), string_field(obj, "text", path, line_no)};
    if (r.text.empty() && !allow_empty_text) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": empty text for id \"" +
                      r.id + "\"");
    }
    try {
      out.add(std::move(r));
    } catch (const DataError& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  });
  return out;
}

template <typename Record>
void write_id_text(const std::filesystem::path& path, const Collection<Record>& records) {
  auto out = open_output(path);
  for (const auto& r : records) out << json{{"id", r.id}, {"text", r.text}}.dump() << '\n';
}

}  // namespace

DocumentCollection load_documents(const std::filesystem::path& path,
                                  const IngestOptions& options) {
  return load_id_text<Document>(path, options.allow_empty_text);
}

QuerySet load_queries(const std::filesystem::path& path) {
  return load_id_text<Query>(path, false);
}

QrelSet load_qrels(const std::filesystem::path& path) {
  QrelSet qrels;
  for_each_line(path, [&](std::size_t line_no, const std::string& line) {
    const std::string where = path.string() + ":" + std::to_string(line_no) + ": ";
    // qid doc grade, or the four-column TREC form qid iter doc grade
    std::vector<std::string> fields;
    std::istringstream ss(line);
    for (std::string f; ss >> f;) fields.push_back(f);
    if (fields.size() == 4) fields.erase(fields.begin() + 1);
    if (fields.size() != 3) {
      throw DataError(where + "expected `query_id doc_id grade` or `query_id 0 doc_id grade`");
    }
    int grade = 0;
    const auto& g = fields[2];
    auto [ptr, ec] = std::from_chars(g.data(), g.data() + g.size(), grade);
    if (ec != std::errc() || ptr != g.data() + g.size()) {
      throw DataError(where + "grade \"" + g + "\" is not an integer");
    }
    try {
      qrels.add(fields[0], fields[1], grade);
    } catch (const DataError& e) {
      throw DataError(where + e.what());
    }
  });
  return qrels;
}

void validate_sample(const TrainingSample& sample) {
  if (sample.positives.empty()) {
    throw DataError("sample \"" + sample.query.id + "\" has no positive documents");
  }
  std::set<std::string_view> seen;
  for (const auto& d : sample.positives) {
    if (!seen.insert(d.id).second) {
      throw DataError("sample \"" + sample.query.id + "\" repeats positive id \"" + d.id + "\"");
    }
  }
}

TrainingSet load_training_samples(const std::filesystem::path& path) {
  TrainingSet out;
  for_each_line(path, [&](std::size_t line_no, const std::string& line) {
    const std::string where = path.string() + ":" + std::to_string(line_no) + ": ";
    json obj = parse_json_line(path, line_no, line);
    TrainingSample s;
    s.query.id = "s" + std::to_string(out.size());
    s.query.text = string_field(obj, "query", path, line_no);
    auto pos = obj.find("positives");
    if (pos == obj.end() || !pos->is_array()) {
      throw DataError(where + "missing array field \"positives\"");
    }
    if (pos->empty()) throw DataError(where + "empty positives array");
    for (const auto& p : *pos) {
      if (!p.is_string()) throw DataError(where + "positives must be strings");
      s.positives.push_back(
          {s.query.id + "-p" + std::to_string(s.positives.size()), p.get<std::string>()});
    }
    if (auto cat = obj.find("category"); cat != obj.end() && !cat->is_null()) {
      if (!cat->is_string()) throw DataError(where + "category must be a string");
      s.category = cat->get<std::string>();
    }
    out.push_back(std::move(s));
  });
  return out;
}

void write_documents(const std::filesystem::path& path, const DocumentCollection& docs) {
  write_id_text(path, docs);
}

void write_queries(const std::filesystem::path& path, const QuerySet& queries) {
  write_id_text(path, queries);
}

void write_qrels(const std::filesystem::path& path, const QrelSet& qrels) {
  auto out = open_output(path);
  for (const auto& qid : qrels.query_ids()) {
    for (const auto& [doc, grade] : qrels.judgments(qid)) {
      out << qid << '\t' << doc << '\t' << grade << '\n';
    }
  }
}

void write_training_samples(const std::filesystem::path& path, const TrainingSet& samples) {
  auto out = open_output(path);
  for (const auto& s : samples) {
    json positives = json::array();
    for (const auto& d : s.positives) positives.push_back(d.text);
    json obj{{"query", s.query.text}, {"positives", std::move(positives)}};
    if (s.category) obj["category"] = *s.category;
    out << obj.dump() << '\n';
  }
}

}  // namespace qrt
