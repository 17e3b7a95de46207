#include "qrt/synthetic.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "qrt/random.hpp"

namespace qrt {

namespace {

constexpr const char* kTermWords[] = {
    "nocturnal", "retina",  "photon",   "enzyme",   "torque",   "lattice", "isotope",  "glacier",
    "monsoon",   "ferment", "catalyst", "spectrum", "neuron",   "magma",   "tariff",   "ledger",
    "protein",   "vortex",  "alloy",    "delta",    "orbit",    "pollen",  "plasma",   "quartz",
    "sonar",     "thermal", "voltage",  "wavelet",  "xylem",    "yeast",   "zenith",   "algae",
    "basalt",    "cipher",  "dynamo",   "estuary",  "fission",  "gyro",    "humidity", "inertia"};

constexpr const char* kTopicWords[][2] = {
    {"owls", "night"},   {"rivers", "flow"},  {"markets", "price"}, {"engines", "heat"},
    {"stars", "light"},  {"cells", "growth"}, {"storms", "wind"},   {"codes", "error"},
    {"forests", "soil"}, {"metals", "stress"}};

}  // namespace

ExpansionTask make_expansion_task(const ExpansionTaskOptions& options) {
  constexpr std::size_t kMaxTerms = std::size(kTermWords);
  constexpr std::size_t kMaxTopics = std::size(kTopicWords);
  if (options.vocab_size < 2 || options.vocab_size > kMaxTerms) {
    throw std::invalid_argument("vocab_size must be in [2, " + std::to_string(kMaxTerms) + "]");
  }
  if (options.gold_per_sample == 0 || options.gold_per_sample > options.vocab_size) {
    throw std::invalid_argument("gold_per_sample must be in [1, vocab_size]");
  }
  if (options.topics == 0 || options.topics > kMaxTopics) {
    throw std::invalid_argument("topics must be in [1, " + std::to_string(kMaxTopics) + "]");
  }

  ExpansionTask task;
  task.vocab.assign(kTermWords, kTermWords + options.vocab_size);
  Rng rng(options.seed);

  for (std::size_t i = 0; i < options.samples; ++i) {
    // Partial Fisher-Yates for distinct gold terms.
    std::vector<std::size_t> pool(options.vocab_size);
    std::iota(pool.begin(), pool.end(), 0);
    for (std::size_t k = 0; k < options.gold_per_sample; ++k) {
      std::swap(pool[k], pool[k + rng.below(pool.size() - k)]);
    }
    std::vector<std::size_t> gold(pool.begin(),
                                  pool.begin() + static_cast<std::ptrdiff_t>(options.gold_per_sample));

    const auto& topic = kTopicWords[i % options.topics];
    const std::string suffix = (i < 10 ? "0" : "") + std::to_string(i);
    Query query{"q" + suffix, std::string(topic[0]) + " " + topic[1] + " question " +
                                  std::to_string(i)};
    std::string text = topic[0];
    for (auto g : gold) text += " " + task.vocab[g];
    text += " passage" + suffix;
    Document doc{"d" + suffix, text};

    task.training.push_back({query, {doc}, std::string(topic[0])});
    task.documents.add(doc);
    task.queries.add(query);
    task.qrels.add(query.id, doc.id, 1);
    task.gold.push_back(std::move(gold));
  }
  return task;
}

}  // namespace qrt
