#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace qrt {

struct AnalysisOptions {
  bool lowercase = true;
  /// Tokens (compared after lowercasing) dropped from the output.
  std::unordered_set<std::string> stopwords;
};

/// Byte range of one token inside the analysed text plus its normalized form.
struct TokenSpan {
  std::size_t begin;
  std::size_t end;
  std::string token;
};

/// Splits on every code point that is not a letter or digit and lowercases.
///
/// ASCII letters and digits always form tokens. Other code points are
/// treated as letters unless they fall in the Unicode whitespace,
/// punctuation or symbol ranges below U+FF65; malformed UTF-8 bytes act as
/// separators. Lowercasing covers ASCII, Latin-1, Greek and basic Cyrillic.
std::vector<std::string> tokenize(std::string_view text, const AnalysisOptions& options = {});

/// Same split as tokenize(), keeping source offsets.
std::vector<TokenSpan> tokenize_spans(std::string_view text, const AnalysisOptions& options = {});

/// Returns the prefix of `text` ending after its `max_tokens`-th token, or
/// nullopt when the text has at most `max_tokens` tokens.
std::optional<std::string> truncate_to_tokens(std::string_view text, std::size_t max_tokens,
                                              const AnalysisOptions& options = {});

/// One stopword per line; blank lines and lines starting with '#' skipped.
std::unordered_set<std::string> load_stopwords(const std::filesystem::path& path);

}  // namespace qrt
