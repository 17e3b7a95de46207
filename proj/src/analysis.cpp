#include "qrt/analysis.hpp"

#include "qrt/io.hpp"

namespace qrt {

namespace {

struct CodePoint {
  char32_t value;
  std::size_t length;  // bytes consumed
  bool valid;
};

CodePoint decode(std::string_view s, std::size_t i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  if (b0 < 0x80) return {b0, 1, true};
  std::size_t len = 0;
  char32_t cp = 0;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    return {0, 1, false};
  }
  if (i + len > s.size()) return {0, 1, false};
  for (std::size_t k = 1; k < len; ++k) {
    const auto b = static_cast<unsigned char>(s[i + k]);
    if ((b & 0xC0) != 0x80) return {0, 1, false};
    cp = (cp << 6) | (b & 0x3F);
  }
  return {cp, len, true};
}

bool is_word_char(char32_t cp) {
  if (cp < 0x80) {
    return (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z');
  }
  if (cp <= 0xBF) return cp == 0xAA || cp == 0xB5 || cp == 0xBA;  // ª µ º
  if (cp == 0xD7 || cp == 0xF7) return false;                       // × ÷
  if (cp >= 0x2000 && cp <= 0x2BFF) return false;  // punctuation, symbols, arrows
  if (cp >= 0x3000 && cp <= 0x303F) return false;  // CJK punctuation
  if (cp >= 0xFE30 && cp <= 0xFE4F) return false;
  if (cp >= 0xFF00 && cp <= 0xFF0F) return false;  // fullwidth punctuation
  if (cp >= 0xFF1A && cp <= 0xFF20) return false;
  if (cp >= 0xFF3B && cp <= 0xFF40) return false;
  if (cp >= 0xFF5B && cp <= 0xFF65) return false;
  if (cp == 0xFEFF) return false;
  return true;
}

char32_t to_lower(char32_t cp) {
  if (cp >= 'A' && cp <= 'Z') return cp + 32;
  if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 32;
  if (cp >= 0x391 && cp <= 0x3A9 && cp != 0x3A2) return cp + 32;
  if (cp >= 0x410 && cp <= 0x42F) return cp + 32;
  if (cp >= 0x400 && cp <= 0x40F) return cp + 80;
  return cp;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

template <typename Emit>
void scan(std::string_view text, const AnalysisOptions& options, Emit&& emit) {
  std::string current;
  std::size_t start = 0;
  auto flush = [&](std::size_t end) {
    if (current.empty()) return;
    if (!options.stopwords.contains(current)) emit(start, end, std::move(current));
    current.clear();
  };
  std::size_t i = 0;
  while (i < text.size()) {
    const CodePoint cp = decode(text, i);
    if (cp.valid && is_word_char(cp.value)) {
      if (current.empty()) start = i;
      append_utf8(current, options.lowercase ? to_lower(cp.value) : cp.value);
    } else {
      flush(i);
    }
    i += cp.length;
  }
  flush(text.size());
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text, const AnalysisOptions& options) {
  std::vector<std::string> tokens;
  scan(text, options,
       [&](std::size_t, std::size_t, std::string token) { tokens.push_back(std::move(token)); });
  return tokens;
}

std::vector<TokenSpan> tokenize_spans(std::string_view text, const AnalysisOptions& options) {
  std::vector<TokenSpan> spans;
  scan(text, options, [&](std::size_t b, std::size_t e, std::string token) {
    spans.push_back({b, e, std::move(token)});
  });
  return spans;
}

std::optional<std::string> truncate_to_tokens(std::string_view text, std::size_t max_tokens,
                                              const AnalysisOptions& options) {
  const auto spans = tokenize_spans(text, options);
  if (spans.size() <= max_tokens) return std::nullopt;
  if (max_tokens == 0) return std::string();
  return std::string(text.substr(0, spans[max_tokens - 1].end));
}

std::unordered_set<std::string> load_stopwords(const std::filesystem::path& path) {
  std::unordered_set<std::string> words;
  for_each_line(path, [&](std::size_t, const std::string& line) {
    const auto b = line.find_first_not_of(" \t\r");
    const auto e = line.find_last_not_of(" \t\r");
    if (b == std::string::npos || line[b] == '#') return;
    words.insert(line.substr(b, e - b + 1));
  });
  return words;
}

}  // namespace qrt
