#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qrt/corpus.hpp"

namespace qrt {

struct QAAnswer {
  std::string text;
  bool is_selected = false;
  bool is_text_only = true;
};

/// A community question with its answers (at least two).
struct QARecord {
  std::string question_id;
  std::string question_text;
  std::string category;
  std::vector<QAAnswer> answers;

  /// First answer flagged as selected, if any. Later flags are ignored.
  const QAAnswer* selected_answer() const;
};

struct QALoadResult {
  std::vector<QARecord> records;
  std::vector<std::string> warnings;
};

/// JSON lines {"question_id", "question", "category",
///             "answers": [{"text", "selected"}]}.
/// Records with fewer than two answers or duplicate ids are data errors;
/// multiple selected answers only produce a warning.
QALoadResult load_qa_records(const std::filesystem::path& path);

/// Ordered category -> maximum sample count.
using CategoryCaps = std::vector<std::pair<std::string, std::size_t>>;

CategoryCaps default_v1_caps();  // 9 categories, 1200 each
CategoryCaps default_v2_caps();  // 17 categories, 1500 each

/// JSON object {"category": cap, ...}; file order is kept. Caps must be >= 1.
CategoryCaps load_caps(const std::filesystem::path& path);

struct TextOnlyOptions {
  /// A text containing one of these is checked for real prose.
  std::vector<std::string> markers = {"<img", "](http"};
};

/// False when the text contains a marker and nothing but whitespace is left
/// after removing HTML tags, markdown links/images and bare URLs.
bool is_text_only(std::string_view text, const TextOnlyOptions& options = {});

/// Flags every answer's is_text_only and drops records whose question or
/// selected answer is not text-only.
std::vector<QARecord> filter_records(std::span<const QARecord> records,
                                     const TextOnlyOptions& options = {});

struct CurationResult {
  TrainingSet samples;
  std::vector<std::string> warnings;
};

/// Per category in `caps`, a seeded uniform sample of up to cap records that
/// have a selected answer; positive = the selected answer.
CurationResult build_v2(std::span<const QARecord> records, const CategoryCaps& caps,
                        std::uint64_t seed);

/// Per category in `caps`, a seeded uniform sample of up to cap records;
/// positive = the externally generated answer. Sampled questions without a
/// generated answer are skipped with a warning.
CurationResult build_v1(std::span<const QARecord> records,
                        const std::map<std::string, std::string>& generated_answers,
                        const CategoryCaps& caps, std::uint64_t seed);

/// JSON lines {"question_id", "text"}.
std::map<std::string, std::string> load_generated_answers(const std::filesystem::path& path);

}  // namespace qrt
