#include "qrt/bm25.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <stdexcept>

#include "qrt/error.hpp"
#include "qrt/io.hpp"

namespace qrt {

void Bm25Params::validate() const {
  if (!(k1 > 0.0) || !std::isfinite(k1)) throw UsageError("bm25.k1 must be > 0");
  if (!(b >= 0.0 && b <= 1.0)) throw UsageError("bm25.b must be in [0, 1]");
}

double bm25_idf(std::size_t doc_count, std::size_t doc_freq) {
  const double n = static_cast<double>(doc_count);
  const double df = static_cast<double>(doc_freq);
  return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

InvertedIndex InvertedIndex::build(const DocumentCollection& docs,
                                   const AnalysisOptions& analysis) {
  InvertedIndex index;
  index.analysis_ = analysis;
  index.doc_ids_.reserve(docs.size());
  index.doc_lengths_.reserve(docs.size());
  std::unordered_map<std::string, std::uint32_t> counts;
  for (const auto& doc : docs) {
    const auto ordinal = static_cast<std::uint32_t>(index.doc_ids_.size());
    const auto tokens = tokenize(doc.text, analysis);
    counts.clear();
    for (const auto& t : tokens) ++counts[t];
    // Ordinals increase monotonically, so appending keeps postings sorted.
    for (const auto& [term, tf] : counts) index.postings_[term].push_back({ordinal, tf});
    index.doc_ids_.push_back(doc.id);
    index.doc_lengths_.push_back(static_cast<std::uint32_t>(tokens.size()));
  }
  index.finalize_stats();
  return index;
}

void InvertedIndex::finalize_stats() {
  if (doc_lengths_.empty()) {
    avg_doc_length_ = 0.0;
    return;
  }
  double total = 0.0;
  for (auto len : doc_lengths_) total += len;
  avg_doc_length_ = total / static_cast<double>(doc_lengths_.size());
}

std::span<const Posting> InvertedIndex::postings(std::string_view term) const {
  auto it = postings_.find(std::string(term));
  if (it == postings_.end()) return {};
  return it->second;
}

std::vector<std::string> InvertedIndex::analyze(std::string_view text) const {
  return tokenize(text, analysis_);
}

double InvertedIndex::term_weight(std::size_t doc_freq, std::uint32_t tf, std::size_t ordinal,
                                  const Bm25Params& params) const {
  const double f = static_cast<double>(tf);
  const double rel_len = avg_doc_length_ > 0.0
                             ? static_cast<double>(doc_lengths_[ordinal]) / avg_doc_length_
                             : 0.0;
  const double norm = params.k1 * (1.0 - params.b + params.b * rel_len);
  return bm25_idf(doc_ids_.size(), doc_freq) * f * (params.k1 + 1.0) / (f + norm);
}

double InvertedIndex::score(std::span<const std::string> query_tokens, std::size_t ordinal,
                            const Bm25Params& params) const {
  if (ordinal >= doc_ids_.size()) {
    throw std::out_of_range("document ordinal " + std::to_string(ordinal) + " out of range");
  }
  double total = 0.0;
  for (const auto& token : query_tokens) {
    const auto plist = postings(token);
    auto it = std::lower_bound(plist.begin(), plist.end(), ordinal,
                               [](const Posting& p, std::size_t o) { return p.doc < o; });
    if (it != plist.end() && it->doc == ordinal) {
      total += term_weight(plist.size(), it->tf, ordinal, params);
    }
  }
  return total;
}

RankedList InvertedIndex::search(std::span<const std::string> query_tokens, std::size_t k,
                                 const Bm25Params& params) const {
  if (k == 0) throw std::invalid_argument("k must be >= 1");
  // Term-at-a-time accumulation in query-token order, so each document's
  // score is summed in the same order as score().
  std::vector<double> acc(doc_ids_.size(), 0.0);
  std::vector<std::uint32_t> touched;
  std::vector<bool> seen(doc_ids_.size(), false);
  for (const auto& token : query_tokens) {
    const auto plist = postings(token);
    for (const auto& p : plist) {
      acc[p.doc] += term_weight(plist.size(), p.tf, p.doc, params);
      if (!seen[p.doc]) {
        seen[p.doc] = true;
        touched.push_back(p.doc);
      }
    }
  }
  std::vector<std::uint32_t> hits;
  hits.reserve(touched.size());
  for (auto d : touched) {
    if (acc[d] > 0.0) hits.push_back(d);
  }
  auto better = [&](std::uint32_t a, std::uint32_t b) {
    if (acc[a] != acc[b]) return acc[a] > acc[b];
    return doc_ids_[a] < doc_ids_[b];
  };
  const std::size_t n = std::min(k, hits.size());
  std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(n), hits.end(),
                    better);
  RankedList out;
  out.entries.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.entries.push_back({doc_ids_[hits[i]], acc[hits[i]]});
  return out;
}

RankedList InvertedIndex::search(std::string_view query_text, std::size_t k,
                                 const Bm25Params& params) const {
  const auto tokens = analyze(query_text);
  return search(tokens, k, params);
}

bool operator==(const InvertedIndex& a, const InvertedIndex& b) {
  return a.postings_ == b.postings_ && a.doc_lengths_ == b.doc_lengths_ &&
         a.doc_ids_ == b.doc_ids_ && a.analysis_.lowercase == b.analysis_.lowercase &&
         a.analysis_.stopwords == b.analysis_.stopwords;
}

// ---------------------------------------------------------------------------
// Snapshot IO. All integers little-endian.

namespace {

constexpr std::uint8_t kSnapshotVersion = 1;
constexpr char kMagic[4] = {'Q', 'R', 'T', 'I'};

class Writer {
 public:
  explicit Writer(std::ofstream& out) : out_(out) {}
  void u8(std::uint8_t v) { out_.put(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    char buf[4];
    for (int i = 0; i < 4; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    out_.write(buf, 4);
  }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }

 private:
  std::ofstream& out_;
};

class Reader {
 public:
  Reader(std::string data, std::string name) : data_(std::move(data)), name_(std::move(name)) {}
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(data_[pos_++]);
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    }
    pos_ += 4;
    return v;
  }
  std::string str() {
    const auto len = u32();
    need(len);
    std::string s = data_.substr(pos_, len);
    pos_ += len;
    return s;
  }
  void bytes(char* out, std::size_t n) {
    need(n);
    std::memcpy(out, data_.data() + pos_, n);
    pos_ += n;
  }
  bool at_end() const { return pos_ == data_.size(); }
  [[noreturn]] void fail(const std::string& what) const {
    throw DataError(name_ + ": corrupt index snapshot: " + what);
  }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) fail("unexpected end of file");
  }
  std::string data_;
  std::string name_;
  std::size_t pos_ = 0;
};

}  // namespace

void InvertedIndex::save(const std::filesystem::path& path) const {
  auto out = open_output(path, /*binary=*/true);
  Writer w(out);
  w.u8(kSnapshotVersion);
  out.write(kMagic, 4);
  w.u8(analysis_.lowercase ? 1 : 0);
  std::vector<std::string> stop(analysis_.stopwords.begin(), analysis_.stopwords.end());
  std::sort(stop.begin(), stop.end());
  w.u32(static_cast<std::uint32_t>(stop.size()));
  for (const auto& s : stop) w.str(s);
  w.u32(static_cast<std::uint32_t>(doc_ids_.size()));
  for (std::size_t i = 0; i < doc_ids_.size(); ++i) {
    w.str(doc_ids_[i]);
    w.u32(doc_lengths_[i]);
  }
  std::map<std::string_view, const std::vector<Posting>*> sorted;
  for (const auto& [term, plist] : postings_) sorted.emplace(term, &plist);
  w.u32(static_cast<std::uint32_t>(sorted.size()));
  for (const auto& [term, plist] : sorted) {
    w.str(std::string(term));
    w.u32(static_cast<std::uint32_t>(plist->size()));
    for (const auto& p : *plist) {
      w.u32(p.doc);
      w.u32(p.tf);
    }
  }
  if (!out) throw DataError("write failed: " + path.string());
}

InvertedIndex InvertedIndex::load(const std::filesystem::path& path) {
  Reader r(read_file(path), path.string());
  const auto version = r.u8();
  if (version != kSnapshotVersion) r.fail("unsupported version " + std::to_string(version));
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) r.fail("bad magic");
  InvertedIndex index;
  index.analysis_.lowercase = r.u8() != 0;
  for (auto n = r.u32(); n > 0; --n) index.analysis_.stopwords.insert(r.str());
  const auto doc_count = r.u32();
  for (std::uint32_t i = 0; i < doc_count; ++i) {
    index.doc_ids_.push_back(r.str());
    index.doc_lengths_.push_back(r.u32());
  }
  for (auto n = r.u32(); n > 0; --n) {
    auto term = r.str();
    const auto count = r.u32();
    std::vector<Posting> plist;
    plist.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
      Posting p{r.u32(), r.u32()};
      if (p.doc >= doc_count || p.tf == 0) r.fail("invalid posting for \"" + term + "\"");
      if (!plist.empty() && plist.back().doc >= p.doc) r.fail("unsorted postings");
      plist.push_back(p);
    }
    if (!index.postings_.emplace(std::move(term), std::move(plist)).second) {
      r.fail("duplicate term");
    }
  }
  if (!r.at_end()) r.fail("trailing bytes");
  index.finalize_stats();
  return index;
}

}  // namespace qrt
