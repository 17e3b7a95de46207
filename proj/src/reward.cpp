#include "qrt/reward.hpp"

#include <stdexcept>

namespace qrt {

namespace {

void require_positives(std::span<const Document> positives) {
  if (positives.empty()) throw std::invalid_argument("reward requires at least one positive");
}

bool all_space(std::string_view s) {
  return s.find_first_not_of(" \t\r\n") == std::string_view::npos;
}

std::size_t count(std::string_view haystack, std::string_view needle) {
  std::size_t n = 0;
  for (auto pos = haystack.find(needle); pos != std::string_view::npos;
       pos = haystack.find(needle, pos + needle.size())) {
    ++n;
  }
  return n;
}

}  // namespace

double query_score(const RelevanceProvider& provider, std::string_view q,
                   std::span<const Document> positives) {
  require_positives(positives);
  double total = 0.0;
  for (const auto& d : positives) total += relevance(provider, q, d.text);
  return total;
}

double semi_rule_reward(const RelevanceProvider& provider, std::string_view q,
                        std::string_view q_prime, std::span<const Document> positives) {
  require_positives(positives);
  const double before = query_score(provider, q, positives);
  const double after = query_score(provider, q_prime, positives);
  return (after - before) / static_cast<double>(positives.size());
}

std::optional<std::string> format_gate(std::string_view output, OutputFormat format,
                                       ScoredContent content) {
  if (format == OutputFormat::plain) return std::string(output);

  static constexpr std::string_view kThinkOpen = "<think>", kThinkClose = "</think>";
  static constexpr std::string_view kAnswerOpen = "<answer>", kAnswerClose = "</answer>";
  for (auto tag : {kThinkOpen, kThinkClose, kAnswerOpen, kAnswerClose}) {
    if (count(output, tag) != 1) return std::nullopt;
  }
  const auto t0 = output.find(kThinkOpen);
  const auto t1 = output.find(kThinkClose);
  const auto a0 = output.find(kAnswerOpen);
  const auto a1 = output.find(kAnswerClose);
  if (!(t0 < t1 && t1 < a0 && a0 < a1)) return std::nullopt;
  if (!all_space(output.substr(0, t0))) return std::nullopt;
  const auto between = output.substr(t1 + kThinkClose.size(), a0 - t1 - kThinkClose.size());
  if (!all_space(between)) return std::nullopt;
  if (!all_space(output.substr(a1 + kAnswerClose.size()))) return std::nullopt;

  const auto think = output.substr(t0 + kThinkOpen.size(), t1 - t0 - kThinkOpen.size());
  const auto answer = output.substr(a0 + kAnswerOpen.size(), a1 - a0 - kAnswerOpen.size());
  if (content == ScoredContent::think_and_answer) {
    std::string joined(think);
    joined += ' ';
    joined += answer;
    return joined;
  }
  return std::string(answer);
}

std::vector<RewardRecord> score_group(const RelevanceProvider& provider,
                                      const TrainingSample& sample,
                                      std::span<const std::string> rewrites,
                                      const RewardOptions& options) {
  if (rewrites.empty()) throw std::invalid_argument("score_group requires at least one rewrite");
  require_positives(sample.positives);

  std::vector<RewardRecord> records;
  records.reserve(rewrites.size());

  // Embeddings of q and D+ are shared by the whole group and only computed
  // once some rewrite survives the gate.
  std::vector<EmbeddingVector> positives;
  std::optional<double> score_q;
  auto score_against_positives = [&](const EmbeddingVector& v) {
    double total = 0.0;
    for (const auto& d : positives) total += cosine(v, d);
    return total;
  };

  const double n = static_cast<double>(sample.positives.size());
  for (const auto& output : rewrites) {
    RewardRecord rec;
    rec.sample_id = sample.query.id;
    auto scored = format_gate(output, options.format, options.content);
    if (!scored) {
      rec.rewrite_text = output;
      rec.reward = kFormatPenalty;
      rec.format_failed = true;
      records.push_back(std::move(rec));
      continue;
    }
    if (options.max_completion_tokens > 0) {
      if (auto cut = truncate_to_tokens(*scored, options.max_completion_tokens,
                                        options.analysis)) {
        scored = std::move(cut);
        rec.truncated = true;
      }
    }
    if (!score_q) {
      for (const auto& d : sample.positives) positives.push_back(provider.embed(d.text));
      score_q = score_against_positives(provider.embed(sample.query.text));
    }
    rec.score_q = score_q;
    rec.score_q_prime = score_against_positives(provider.embed(*scored));
    rec.reward = (*rec.score_q_prime - *rec.score_q) / n;
    rec.rewrite_text = std::move(*scored);
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace qrt
