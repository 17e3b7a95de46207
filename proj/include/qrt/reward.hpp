#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qrt/analysis.hpp"
#include "qrt/corpus.hpp"
#include "qrt/relevance.hpp"

namespace qrt {

enum class OutputFormat { plain, explicit_thinking };

/// Which part of an explicit-thinking output is scored as the rewrite.
enum class ScoredContent { answer, think_and_answer };

struct RewardOptions {
  OutputFormat format = OutputFormat::plain;
  ScoredContent content = ScoredContent::answer;
  /// Rewrites longer than this many tokens are cut before embedding.
  /// 0 disables truncation.
  std::size_t max_completion_tokens = 500;
  AnalysisOptions analysis;
};

/// Reward assigned when an output fails the format gate.
inline constexpr double kFormatPenalty = -1.0;

struct RewardRecord {
  std::string sample_id;
  std::string rewrite_text;  // text that was scored; raw output when gated out
  std::optional<double> score_q;
  std::optional<double> score_q_prime;
  double reward = 0.0;
  bool format_failed = false;
  bool truncated = false;
};

/// Sum of relevance(q, d) over the positives. Requires at least one positive.
double query_score(const RelevanceProvider& provider, std::string_view q,
                   std::span<const Document> positives);

/// (query_score(q') - query_score(q)) / |D+|.
double semi_rule_reward(const RelevanceProvider& provider, std::string_view q,
                        std::string_view q_prime, std::span<const Document> positives);

/// The scoreable text of a model output, or nullopt when the output fails
/// the format check.
///
/// Plain outputs always pass unchanged. Explicit-thinking outputs must be
/// exactly one <think>...</think> block followed by one <answer>...</answer>
/// block; only whitespace may surround or separate them.
std::optional<std::string> format_gate(std::string_view output, OutputFormat format,
                                       ScoredContent content = ScoredContent::answer);

/// One record per rewrite, in input order. Gated-out rewrites get the −1
/// penalty without touching the provider; the original query and the
/// positives are embedded only if at least one rewrite passes.
std::vector<RewardRecord> score_group(const RelevanceProvider& provider,
                                      const TrainingSample& sample,
                                      std::span<const std::string> rewrites,
                                      const RewardOptions& options = {});

}  // namespace qrt
