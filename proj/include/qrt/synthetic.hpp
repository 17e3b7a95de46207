#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "qrt/corpus.hpp"

namespace qrt {

struct ExpansionTaskOptions {
  std::size_t samples = 30;
  std::size_t vocab_size = 32;
  std::size_t gold_per_sample = 3;
  /// Queries of one topic share a word with every document of that topic,
  /// so the original query cannot tell those documents apart.
  std::size_t topics = 5;
  std::uint64_t seed = 7;
};

/// Desk-scale query-expansion task.
///
/// Sample i has query "<topic words> question <i>" and one positive
/// document "<topic word> <gold terms> passage<i>". The gold terms are
/// drawn without replacement from the vocabulary and never occur in any
/// query. The documents, queries and binary qrels form a retrieval
/// fixture for the same task.
struct ExpansionTask {
  std::vector<std::string> vocab;
  TrainingSet training;
  DocumentCollection documents;
  QuerySet queries;
  QrelSet qrels;
  /// Vocabulary indices of each sample's gold terms.
  std::vector<std::vector<std::size_t>> gold;
};

ExpansionTask make_expansion_task(const ExpansionTaskOptions& options = {});

}  // namespace qrt
