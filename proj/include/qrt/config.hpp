#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qrt/analysis.hpp"
#include "qrt/bm25.hpp"
#include "qrt/evalkit.hpp"
#include "qrt/grpo.hpp"
#include "qrt/remote_embedder.hpp"
#include "qrt/reward.hpp"

namespace qrt {

enum class ConfigType { boolean, integer, real, text, choice };

struct ConfigKey {
  std::string name;  // "section.key"
  ConfigType type;
  std::string default_value;
  std::string help;
  std::vector<std::string> choices;  // for ConfigType::choice
};

/// Every key the toolkit understands, in help order.
const std::vector<ConfigKey>& config_keys();

/// Layered key=value settings: defaults, then a config file, then QRT_*
/// environment variables, then command-line overrides. Later layers win.
/// Unknown keys and unparsable values raise UsageError.
class AppConfig {
 public:
  AppConfig();

  /// `key = value` lines; '#' starts a comment line.
  void load_file(const std::filesystem::path& path);

  /// QRT_BM25_K1=1.5 sets bm25.k1: the prefix is dropped, the first '_'
  /// becomes '.', and the name is lowercased.
  void apply_environment(const std::map<std::string, std::string>& env);
  static std::map<std::string, std::string> process_environment();

  void set(std::string_view key, std::string_view value);

  bool explicitly_set(std::string_view key) const;

  std::string get_string(std::string_view key) const;
  double get_double(std::string_view key) const;
  std::int64_t get_int(std::string_view key) const;
  bool get_bool(std::string_view key) const;

  AnalysisOptions analysis() const;
  Bm25Params bm25() const;
  RewardOptions reward() const;
  GrpoConfig grpo() const;
  EvalOptions eval() const;
  RemoteOptions remote() const;

  /// Multi-line "key (default: value)  help" listing of config_keys().
  static std::string describe();

 private:
  const ConfigKey& lookup(std::string_view key) const;

  std::map<std::string, std::string, std::less<>> values_;
  std::map<std::string, bool, std::less<>> explicit_;
};

}  // namespace qrt
