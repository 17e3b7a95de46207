#include "qrt/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <sstream>

#include "qrt/error.hpp"
#include "qrt/io.hpp"

extern char** environ;

namespace qrt {

const std::vector<ConfigKey>& config_keys() {
  using T = ConfigType;
  static const std::vector<ConfigKey> keys = {
      {"analysis.lowercase", T::boolean, "true", "lowercase tokens", {}},
      {"analysis.stopwords", T::text, "none", "stopword list file, or none", {}},
      {"bm25.k1", T::real, "1.2", "term-frequency saturation (> 0)", {}},
      {"bm25.b", T::real, "0.75", "length normalization in [0, 1]", {}},
      {"relevance.provider", T::choice, "hashed", "embedding provider",
       {"hashed", "precomputed", "remote"}},
      {"relevance.dim", T::integer, "1024", "hashed embedder dimension", {}},
      {"relevance.max_tokens", T::integer, "0", "hashed embedder input cap (0 = none)", {}},
      {"relevance.store", T::text, "", "precomputed vector file (JSON lines)", {}},
      {"relevance.endpoint", T::text, "http://127.0.0.1:8080", "remote service base URL", {}},
      {"relevance.path", T::text, "/embed", "remote service request path", {}},
      {"relevance.remote_dim", T::integer, "0", "expected remote dimension (0 = adopt)", {}},
      {"relevance.timeout_ms", T::integer, "30000", "remote request timeout", {}},
      {"relevance.retries", T::integer, "3", "remote retries after the first attempt", {}},
      {"relevance.max_in_flight", T::integer, "4", "concurrent remote requests", {}},
      {"relevance.batch_size", T::integer, "32", "texts per remote request", {}},
      {"reward.mode", T::choice, "plain", "output format check",
       {"plain", "explicit-thinking"}},
      {"reward.content", T::choice, "answer", "scored span in explicit-thinking mode",
       {"answer", "think+answer"}},
      {"reward.max_completion_tokens", T::integer, "500", "rewrite token cap (0 = none)", {}},
      {"grpo.profile", T::choice, "toy", "llm-scale sets the learning-rate default to 1e-6",
       {"toy", "llm-scale"}},
      {"grpo.group_size", T::integer, "16", "samples per prompt (>= 2)", {}},
      {"grpo.clip_epsilon", T::real, "0.2", "ratio clip range in (0, 1)", {}},
      {"grpo.kl_beta", T::real, "0.008", "KL coefficient (>= 0)", {}},
      {"grpo.delta", T::real, "1e-4", "advantage denominator offset (> 0)", {}},
      {"grpo.learning_rate", T::real, "0.1", "step size (profile llm-scale: 1e-6)", {}},
      {"grpo.group_weight_mode", T::choice, "uniform", "advantage group weight",
       {"uniform", "variance-scaled"}},
      {"grpo.ratio_level", T::choice, "sequence", "importance ratio granularity",
       {"sequence", "token"}},
      {"grpo.groups_per_step", T::integer, "1", "groups per gradient step", {}},
      {"grpo.inner_epochs", T::integer, "1", "updates per rollout batch", {}},
      {"grpo.seed", T::integer, "0", "master seed", {}},
      {"grpo.expansion_length", T::integer, "3", "terms appended per rewrite", {}},
      {"grpo.feature_buckets", T::integer, "1024", "toy policy query buckets", {}},
      {"eval.k", T::integer, "10", "nDCG cutoff", {}},
      {"eval.skip_unjudged", T::boolean, "false",
       "drop queries with no results or no relevant docs instead of scoring 0", {}},
  };
  return keys;
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::optional<bool> parse_bool(std::string_view v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  return std::nullopt;
}

std::optional<std::int64_t> parse_int(std::string_view v) {
  std::int64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) return std::nullopt;
  return out;
}

std::optional<double> parse_double(std::string_view v) {
  // std::from_chars for double is missing from older libstdc++.
  std::string s(v);
  char* end = nullptr;
  errno = 0;
  const double out = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || errno != 0 || !std::isfinite(out)) {
    return std::nullopt;
  }
  return out;
}

}  // namespace

AppConfig::AppConfig() {
  for (const auto& k : config_keys()) values_[k.name] = k.default_value;
}

const ConfigKey& AppConfig::lookup(std::string_view key) const {
  const auto& keys = config_keys();
  auto it = std::find_if(keys.begin(), keys.end(), [&](const ConfigKey& k) { return k.name == key; });
  if (it == keys.end()) throw UsageError("unknown config key \"" + std::string(key) + "\"");
  return *it;
}

void AppConfig::set(std::string_view key, std::string_view raw) {
  const auto& entry = lookup(key);
  const std::string value = trim(raw);
  bool ok = true;
  switch (entry.type) {
    case ConfigType::boolean: ok = parse_bool(value).has_value(); break;
    case ConfigType::integer: ok = parse_int(value).has_value(); break;
    case ConfigType::real: ok = parse_double(value).has_value(); break;
    case ConfigType::choice:
      ok = std::find(entry.choices.begin(), entry.choices.end(), value) != entry.choices.end();
      break;
    case ConfigType::text: break;
  }
  if (!ok) {
    std::string msg = "invalid value \"" + value + "\" for " + entry.name;
    if (entry.type == ConfigType::choice) {
      msg += " (expected one of:";
      for (const auto& c : entry.choices) msg += " " + c;
      msg += ")";
    }
    throw UsageError(msg);
  }
  values_[entry.name] = value;
  explicit_[entry.name] = true;
}

bool AppConfig::explicitly_set(std::string_view key) const {
  lookup(key);
  return explicit_.find(key) != explicit_.end();
}

void AppConfig::load_file(const std::filesystem::path& path) {
  for_each_line(path, [&](std::size_t line_no, const std::string& line) {
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') return;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw UsageError(path.string() + ":" + std::to_string(line_no) + ": expected key=value");
    }
    try {
      set(trim(t.substr(0, eq)), t.substr(eq + 1));
    } catch (const UsageError& e) {
      throw UsageError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  });
}

void AppConfig::apply_environment(const std::map<std::string, std::string>& env) {
  static constexpr std::string_view kPrefix = "QRT_";
  for (const auto& [name, value] : env) {
    if (name.rfind(kPrefix, 0) != 0) continue;
    std::string key = name.substr(kPrefix.size());
    std::transform(key.begin(), key.end(), key.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    const auto us = key.find('_');
    if (us == std::string::npos) throw UsageError("unknown config variable " + name);
    key[us] = '.';
    try {
      set(key, value);
    } catch (const UsageError& e) {
      throw UsageError(name + ": " + e.what());
    }
  }
}

std::map<std::string, std::string> AppConfig::process_environment() {
  std::map<std::string, std::string> env;
  for (char** e = environ; e != nullptr && *e != nullptr; ++e) {
    std::string_view entry(*e);
    const auto eq = entry.find('=');
    if (eq == std::string_view::npos) continue;
    env.emplace(entry.substr(0, eq), entry.substr(eq + 1));
  }
  return env;
}

std::string AppConfig::get_string(std::string_view key) const {
  lookup(key);
  return values_.find(key)->second;
}

double AppConfig::get_double(std::string_view key) const {
  return *parse_double(get_string(key));
}

std::int64_t AppConfig::get_int(std::string_view key) const { return *parse_int(get_string(key)); }

bool AppConfig::get_bool(std::string_view key) const { return *parse_bool(get_string(key)); }

namespace {

std::size_t non_negative(const AppConfig& cfg, std::string_view key) {
  const auto v = cfg.get_int(key);
  if (v < 0) throw UsageError(std::string(key) + " must be >= 0");
  return static_cast<std::size_t>(v);
}

}  // namespace

AnalysisOptions AppConfig::analysis() const {
  AnalysisOptions opts;
  opts.lowercase = get_bool("analysis.lowercase");
  const auto stop = get_string("analysis.stopwords");
  if (!stop.empty() && stop != "none") opts.stopwords = load_stopwords(stop);
  return opts;
}

Bm25Params AppConfig::bm25() const {
  Bm25Params p{get_double("bm25.k1"), get_double("bm25.b")};
  p.validate();
  return p;
}

RewardOptions AppConfig::reward() const {
  RewardOptions opts;
  opts.format = get_string("reward.mode") == "explicit-thinking" ? OutputFormat::explicit_thinking
                                                                 : OutputFormat::plain;
  opts.content = get_string("reward.content") == "think+answer" ? ScoredContent::think_and_answer
                                                                : ScoredContent::answer;
  opts.max_completion_tokens = non_negative(*this, "reward.max_completion_tokens");
  opts.analysis = analysis();
  return opts;
}

GrpoConfig AppConfig::grpo() const {
  GrpoConfig cfg;
  cfg.group_size = non_negative(*this, "grpo.group_size");
  cfg.clip_epsilon = get_double("grpo.clip_epsilon");
  cfg.kl_beta = get_double("grpo.kl_beta");
  cfg.delta = get_double("grpo.delta");
  cfg.learning_rate = get_double("grpo.learning_rate");
  if (get_string("grpo.profile") == "llm-scale" && !explicitly_set("grpo.learning_rate")) {
    cfg.learning_rate = 1e-6;
  }
  cfg.group_weight_mode = get_string("grpo.group_weight_mode") == "variance-scaled"
                              ? GroupWeightMode::variance_scaled
                              : GroupWeightMode::uniform;
  cfg.ratio_level =
      get_string("grpo.ratio_level") == "token" ? RatioLevel::token : RatioLevel::sequence;
  cfg.groups_per_step = non_negative(*this, "grpo.groups_per_step");
  cfg.inner_epochs = non_negative(*this, "grpo.inner_epochs");
  cfg.seed = static_cast<std::uint64_t>(get_int("grpo.seed"));
  cfg.validate();
  return cfg;
}

EvalOptions AppConfig::eval() const {
  EvalOptions opts;
  opts.k = non_negative(*this, "eval.k");
  if (opts.k == 0) throw UsageError("eval.k must be >= 1");
  opts.skip_unjudged = get_bool("eval.skip_unjudged");
  return opts;
}

RemoteOptions AppConfig::remote() const {
  RemoteOptions opts;
  opts.base_url = get_string("relevance.endpoint");
  opts.path = get_string("relevance.path");
  opts.dim = non_negative(*this, "relevance.remote_dim");
  opts.timeout = std::chrono::milliseconds(non_negative(*this, "relevance.timeout_ms"));
  opts.retries = non_negative(*this, "relevance.retries");
  opts.max_in_flight = non_negative(*this, "relevance.max_in_flight");
  opts.batch_size = non_negative(*this, "relevance.batch_size");
  if (opts.max_in_flight == 0) throw UsageError("relevance.max_in_flight must be >= 1");
  if (opts.batch_size == 0) throw UsageError("relevance.batch_size must be >= 1");
  return opts;
}

std::string AppConfig::describe() {
  std::size_t width = 0;
  for (const auto& k : config_keys()) width = std::max(width, k.name.size() + k.default_value.size());
  std::ostringstream out;
  for (const auto& k : config_keys()) {
    std::string head = k.name + "=" + k.default_value;
    out << "  " << head << std::string(width + 3 - head.size(), ' ') << k.help;
    if (k.type == ConfigType::choice) {
      out << " [";
      for (std::size_t i = 0; i < k.choices.size(); ++i) out << (i ? "|" : "") << k.choices[i];
      out << "]";
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace qrt
