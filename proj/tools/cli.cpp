#include "cli.hpp"

#include <fstream>
#include <memory>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qrt/bm25.hpp"
#include "qrt/config.hpp"
#include "qrt/corpus.hpp"
#include "qrt/curation.hpp"
#include "qrt/error.hpp"
#include "qrt/evalkit.hpp"
#include "qrt/io.hpp"
#include "qrt/log.hpp"
#include "qrt/relevance.hpp"
#include "qrt/remote_embedder.hpp"
#include "qrt/reward.hpp"
#include "qrt/synthetic.hpp"
#include "qrt/trainer.hpp"

namespace qrt::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

struct GlobalOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::int64_t> seed;
  bool quiet = false;
};

struct IndexArgs {
  std::string docs, out;
  bool allow_empty = false;
};

struct SearchArgs {
  std::string index, queries, out, tag = "bm25";
  std::optional<std::int64_t> k;
};

struct CurateArgs {
  std::string mode, records, generated, caps, out;
  std::vector<std::string> markers;
};

struct RewardArgs {
  std::string samples, rewrites, out;
};

struct TrainArgs {
  std::string samples, vocab, log, checkpoint, greedy_out, task_dir;
  bool synthetic = false;
  std::size_t iterations = 200;
  std::map<std::string, std::string> grpo_flags;
};

struct RewriteEvalArgs {
  std::string index, docs, queries, qrels, rewrites, run_out, report, baseline_report;
  std::optional<std::int64_t> k;
};

struct CompareArgs {
  std::string a, b, label_a = "a", label_b = "b";
};

fs::path index_file(const std::string& arg) {
  fs::path p(arg);
  if (fs::is_directory(p)) return p / "index.bin";
  return p;
}

std::unique_ptr<RelevanceProvider> make_provider(const AppConfig& cfg) {
  const auto kind = cfg.get_string("relevance.provider");
  if (kind == "precomputed") {
    const auto store = cfg.get_string("relevance.store");
    if (store.empty()) throw UsageError("relevance.store must name a vector file");
    return std::make_unique<PrecomputedStore>(PrecomputedStore::load(store));
  }
  if (kind == "remote") return std::make_unique<RemoteEmbedder>(cfg.remote());
  const auto dim = cfg.get_int("relevance.dim");
  const auto max_tokens = cfg.get_int("relevance.max_tokens");
  if (dim < 1) throw UsageError("relevance.dim must be >= 1");
  if (max_tokens < 0) throw UsageError("relevance.max_tokens must be >= 0");
  return std::make_unique<HashedEmbedder>(static_cast<std::size_t>(dim), cfg.analysis(),
                                          static_cast<std::size_t>(max_tokens));
}

std::size_t positive_k(std::optional<std::int64_t> flag, const AppConfig& cfg) {
  const std::int64_t k = flag ? *flag : cfg.get_int("eval.k");
  if (k < 1) throw UsageError("k must be >= 1");
  return static_cast<std::size_t>(k);
}

std::vector<std::string> load_vocab(const fs::path& path) {
  std::vector<std::string> vocab;
  for_each_line(path, [&](std::size_t, const std::string& line) {
    const auto b = line.find_first_not_of(" \t\r");
    const auto e = line.find_last_not_of(" \t\r");
    vocab.push_back(line.substr(b, e - b + 1));
  });
  return vocab;
}

json record_json(const RewardRecord& r) {
  json j{{"sample_id", r.sample_id},
         {"rewrite", r.rewrite_text},
         {"reward", r.reward},
         {"format_failed", r.format_failed},
         {"truncated", r.truncated}};
  j["score_q"] = r.score_q ? json(*r.score_q) : json(nullptr);
  j["score_q_prime"] = r.score_q_prime ? json(*r.score_q_prime) : json(nullptr);
  return j;
}

int cmd_index(const IndexArgs& a, const AppConfig& cfg, std::ostream& err) {
  IngestOptions ingest;
  ingest.allow_empty_text = a.allow_empty;
  const auto docs = load_documents(a.docs, ingest);
  const auto index = InvertedIndex::build(docs, cfg.analysis());
  const fs::path dir(a.out);
  fs::create_directories(dir);
  index.save(dir / "index.bin");
  err << "indexed " << index.doc_count() << " documents, " << index.term_count() << " terms -> "
      << (dir / "index.bin").string() << '\n';
  return kOk;
}

int cmd_search(const SearchArgs& a, const AppConfig& cfg, std::ostream& out) {
  const auto index = InvertedIndex::load(index_file(a.index));
  const auto queries = load_queries(a.queries);
  const auto run = rewrite_and_retrieve(queries, identity_rewriter(), index, positive_k(a.k, cfg),
                                        cfg.bm25());
  if (a.out.empty()) {
    write_trec_run(out, run, a.tag);
  } else {
    write_trec_run(fs::path(a.out), run, a.tag);
  }
  return kOk;
}

int cmd_curate(const CurateArgs& a, std::uint64_t seed, std::ostream& err) {
  auto loaded = load_qa_records(a.records);
  for (const auto& w : loaded.warnings) log_warning(w);
  TextOnlyOptions text_only;
  if (!a.markers.empty()) text_only.markers = a.markers;
  const auto kept = filter_records(loaded.records, text_only);

  CurationResult result;
  if (a.mode == "v2") {
    const auto caps = a.caps.empty() ? default_v2_caps() : load_caps(a.caps);
    result = build_v2(kept, caps, seed);
  } else {
    if (a.generated.empty()) throw UsageError("curate --mode v1 requires --generated");
    const auto caps = a.caps.empty() ? default_v1_caps() : load_caps(a.caps);
    result = build_v1(kept, load_generated_answers(a.generated), caps, seed);
  }
  for (const auto& w : result.warnings) log_warning(w);
  write_training_samples(a.out, result.samples);
  err << "records " << loaded.records.size() << ", text-only " << kept.size() << ", samples "
      << result.samples.size() << ", warnings " << result.warnings.size() << '\n';
  return kOk;
}

int cmd_reward(const RewardArgs& a, const AppConfig& cfg, std::ostream& out) {
  const auto samples = load_training_samples(a.samples);
  std::map<std::string, const TrainingSample*> by_id;
  for (const auto& s : samples) by_id.emplace(s.query.id, &s);

  std::vector<std::string> order;
  std::map<std::string, std::vector<std::string>> groups;
  for_each_line(a.rewrites, [&](std::size_t line_no, const std::string& line) {
    const std::string where = a.rewrites + ":" + std::to_string(line_no) + ": ";
    json obj;
    try {
      obj = json::parse(line);
      auto id = obj.at("id").get<std::string>();
      if (!by_id.contains(id)) throw DataError(where + "unknown sample id \"" + id + "\"");
      auto [it, inserted] = groups.try_emplace(id);
      if (inserted) order.push_back(id);
      it->second.push_back(obj.at("text").get<std::string>());
    } catch (const json::exception& e) {
      throw DataError(where + "invalid rewrite record: " + e.what());
    }
  });

  const auto provider = make_provider(cfg);
  const auto options = cfg.reward();
  std::ofstream file;
  if (!a.out.empty()) file = open_output(a.out);
  std::ostream& sink = a.out.empty() ? out : file;
  for (const auto& id : order) {
    for (const auto& rec : score_group(*provider, *by_id.at(id), groups.at(id), options)) {
      sink << record_json(rec).dump() << '\n';
    }
  }
  return kOk;
}

int cmd_train(const TrainArgs& a, AppConfig& cfg, std::ostream& out, std::ostream& err) {
  for (const auto& [key, value] : a.grpo_flags) cfg.set(key, value);
  const auto config = cfg.grpo();

  TrainingSet samples;
  std::vector<std::string> vocab;
  std::optional<ExpansionTask> task;
  if (a.synthetic) {
    ExpansionTaskOptions opts;
    opts.seed = config.seed;
    task = make_expansion_task(opts);
    samples = task->training;
    vocab = task->vocab;
    if (!a.task_dir.empty()) {
      const fs::path dir(a.task_dir);
      write_documents(dir / "docs.jsonl", task->documents);
      write_queries(dir / "queries.jsonl", task->queries);
      write_qrels(dir / "qrels.tsv", task->qrels);
      write_training_samples(dir / "samples.jsonl", task->training);
      std::ofstream v = open_output(dir / "vocab.txt");
      for (const auto& t : vocab) v << t << '\n';
    }
  } else {
    if (a.samples.empty() || a.vocab.empty()) {
      throw UsageError("train-toy needs --samples and --vocab, or --synthetic");
    }
    samples = load_training_samples(a.samples);
    vocab = load_vocab(a.vocab);
  }

  const auto buckets = cfg.get_int("grpo.feature_buckets");
  const auto length = cfg.get_int("grpo.expansion_length");
  if (buckets < 1 || length < 1) {
    throw UsageError("grpo.feature_buckets and grpo.expansion_length must be >= 1");
  }
  if (vocab.size() < 2) throw DataError("vocabulary needs at least 2 terms");
  const ToyExpansionPolicy initial(vocab, static_cast<std::size_t>(buckets),
                                   static_cast<std::size_t>(length));
  const auto provider = make_provider(cfg);

  auto result = train(samples, *provider, initial, config, a.iterations, cfg.reward());

  if (!a.log.empty()) {
    write_train_log(a.log, result.log);
  } else {
    for (const auto& e : result.log) {
      out << json{{"iter", e.iter},          {"mean_reward", e.mean_reward},
                  {"mean_kl", e.mean_kl},    {"loss", e.loss},
                  {"clip_frac", e.clip_frac}, {"ratio_clamps", e.ratio_clamps}}
                 .dump()
          << '\n';
    }
  }
  if (!a.checkpoint.empty()) result.policy.save(a.checkpoint);
  if (!a.greedy_out.empty()) {
    std::ofstream g = open_output(a.greedy_out);
    for (const auto& s : samples) {
      const auto actions = result.policy.greedy(s.query.text);
      g << json{{"id", s.query.id}, {"text", result.policy.render(s.query.text, actions)}}.dump()
        << '\n';
    }
  }
  if (!result.log.empty()) {
    err << "iterations " << result.log.size() << ", final mean reward "
        << result.log.back().mean_reward << '\n';
  }
  return kOk;
}

int cmd_rewrite_eval(const RewriteEvalArgs& a, const AppConfig& cfg, std::ostream& out) {
  const auto queries = load_queries(a.queries);
  const auto qrels = load_qrels(a.qrels);
  std::optional<Rewriter> rewriter;
  if (!a.rewrites.empty()) rewriter = map_rewriter(load_rewrites(a.rewrites));

  InvertedIndex index;
  if (!a.index.empty()) {
    index = InvertedIndex::load(index_file(a.index));
  } else if (!a.docs.empty()) {
    index = InvertedIndex::build(load_documents(a.docs), cfg.analysis());
  } else {
    throw UsageError("rewrite-eval needs --index or --docs");
  }

  auto eval = cfg.eval();
  if (a.k) {
    if (*a.k < 1) throw UsageError("k must be >= 1");
    eval.k = static_cast<std::size_t>(*a.k);
  }
  const auto params = cfg.bm25();
  const auto base_run = rewrite_and_retrieve(queries, identity_rewriter(), index, eval.k, params);
  const auto base = evaluate_run(base_run, qrels, eval);
  const auto& run = rewriter ? rewrite_and_retrieve(queries, *rewriter, index, eval.k, params)
                             : base_run;
  const auto report = rewriter ? evaluate_run(run, qrels, eval) : base;

  if (!a.run_out.empty()) write_trec_run(fs::path(a.run_out), run, rewriter ? "rewrite" : "bm25");
  if (!a.report.empty()) write_report(a.report, report);
  if (!a.baseline_report.empty()) write_report(a.baseline_report, base);
  print_comparison(out, compare_runs(base, report), "original", "rewritten");
  return kOk;
}

int cmd_compare(const CompareArgs& a, std::ostream& out) {
  const auto ra = read_report(a.a);
  const auto rb = read_report(a.b);
  print_comparison(out, compare_runs(ra, rb), a.label_a, a.label_b);
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err,
        const std::optional<std::map<std::string, std::string>>& env) {
  CLI::App app{"qrt: query rewriting toolkit (BM25, relevance reward, GRPO, nDCG)"};
  app.name("qrt");
  app.require_subcommand(1);
  app.fallthrough();  // global options may follow the subcommand
  app.footer("Configuration keys (set via --config file, QRT_<SECTION>_<KEY> environment "
             "variables, or --set key=value; later layers win):\n" +
             AppConfig::describe());

  GlobalOptions global;
  app.add_option("--config", global.config_path, "key=value configuration file");
  app.add_option("--set", global.overrides, "override a config key (key=value), repeatable");
  app.add_option("--seed", global.seed, "master seed (sets grpo.seed)");
  app.add_flag("--quiet", global.quiet, "suppress warnings");

  IndexArgs index_args;
  auto* index_cmd = app.add_subcommand("index", "build a BM25 index from documents JSONL");
  index_cmd->add_option("--docs", index_args.docs, "documents JSONL {id, text}")->required();
  index_cmd->add_option("--out", index_args.out, "output directory")->required();
  index_cmd->add_flag("--allow-empty-text", index_args.allow_empty, "accept empty documents");

  SearchArgs search_args;
  auto* search_cmd = app.add_subcommand("search", "BM25 top-k for a query file");
  search_cmd->add_option("--index", search_args.index, "index directory or file")->required();
  search_cmd->add_option("--queries", search_args.queries, "queries JSONL {id, text}")->required();
  search_cmd->add_option("--k", search_args.k, "results per query (default eval.k)");
  search_cmd->add_option("--out", search_args.out, "TREC run output (default stdout)");
  search_cmd->add_option("--tag", search_args.tag, "run tag column");

  CurateArgs curate_args;
  auto* curate_cmd = app.add_subcommand("curate", "build training samples from QA records");
  curate_cmd->add_option("--mode", curate_args.mode, "v1 (generated answers) or v2 (selected)")
      ->required()
      ->check(CLI::IsMember({"v1", "v2"}));
  curate_cmd->add_option("--records", curate_args.records, "QA records JSONL")->required();
  curate_cmd->add_option("--generated", curate_args.generated,
                         "generated answers JSONL {question_id, text} (v1)");
  curate_cmd->add_option("--caps", curate_args.caps, "JSON object category -> cap");
  curate_cmd->add_option("--marker", curate_args.markers,
                         "non-text payload marker, repeatable (default: <img, ](http)");
  curate_cmd->add_option("--out", curate_args.out, "training samples JSONL")->required();

  RewardArgs reward_args;
  auto* reward_cmd = app.add_subcommand("reward", "score rewrites with the relevance reward");
  reward_cmd->add_option("--samples", reward_args.samples, "training samples JSONL")->required();
  reward_cmd->add_option("--rewrites", reward_args.rewrites,
                         "rewrites JSONL {id: sample id, text}")
      ->required();
  reward_cmd->add_option("--out", reward_args.out, "reward records JSONL (default stdout)");

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train-toy", "GRPO on the toy expansion policy");
  train_cmd->add_option("--samples", train_args.samples, "training samples JSONL");
  train_cmd->add_option("--vocab", train_args.vocab, "expansion vocabulary, one term per line");
  train_cmd->add_flag("--synthetic", train_args.synthetic, "use the built-in synthetic task");
  train_cmd->add_option("--task-dir", train_args.task_dir,
                        "with --synthetic: write docs, queries, qrels, samples, vocab here");
  train_cmd->add_option("--iterations", train_args.iterations, "training iterations");
  train_cmd->add_option("--log", train_args.log, "train log JSONL (default stdout)");
  train_cmd->add_option("--checkpoint", train_args.checkpoint, "policy checkpoint JSON");
  train_cmd->add_option("--greedy-out", train_args.greedy_out,
                        "greedy rewrites JSONL {id, text} after training");
  const std::pair<const char*, const char*> grpo_flags[] = {
      {"--group-size", "grpo.group_size"},
      {"--clip-epsilon", "grpo.clip_epsilon"},
      {"--kl-beta", "grpo.kl_beta"},
      {"--delta", "grpo.delta"},
      {"--learning-rate", "grpo.learning_rate"},
      {"--group-weight-mode", "grpo.group_weight_mode"},
      {"--ratio-level", "grpo.ratio_level"},
      {"--groups-per-step", "grpo.groups_per_step"},
      {"--inner-epochs", "grpo.inner_epochs"},
      {"--expansion-length", "grpo.expansion_length"},
      {"--feature-buckets", "grpo.feature_buckets"},
      {"--profile", "grpo.profile"},
  };
  for (const auto& [flag, key] : grpo_flags) {
    const std::string k = key;
    train_cmd->add_option_function<std::string>(
        flag, [&train_args, k](const std::string& v) { train_args.grpo_flags[k] = v; },
        "sets " + k);
  }

  RewriteEvalArgs re_args;
  auto* re_cmd = app.add_subcommand("rewrite-eval", "nDCG of original vs rewritten queries");
  re_cmd->add_option("--index", re_args.index, "index directory or file");
  re_cmd->add_option("--docs", re_args.docs, "documents JSONL (indexed on the fly)");
  re_cmd->add_option("--queries", re_args.queries, "queries JSONL")->required();
  re_cmd->add_option("--qrels", re_args.qrels, "qrels TSV")->required();
  re_cmd->add_option("--rewrites", re_args.rewrites, "rewrites JSONL {id, text}");
  re_cmd->add_option("--k", re_args.k, "cutoff (default eval.k)");
  re_cmd->add_option("--run-out", re_args.run_out, "TREC run of the rewritten queries");
  re_cmd->add_option("--report", re_args.report, "report JSON for the rewritten queries");
  re_cmd->add_option("--baseline-report", re_args.baseline_report,
                     "report JSON for the original queries");

  CompareArgs cmp_args;
  auto* cmp_cmd = app.add_subcommand("compare", "per-query deltas between two reports");
  cmp_cmd->add_option("--a", cmp_args.a, "baseline report JSON")->required();
  cmp_cmd->add_option("--b", cmp_args.b, "candidate report JSON")->required();
  cmp_cmd->add_option("--label-a", cmp_args.label_a, "column label for a");
  cmp_cmd->add_option("--label-b", cmp_args.label_b, "column label for b");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsageError;
  }

  set_warnings_enabled(!global.quiet);
  int code = kOk;
  try {
    AppConfig cfg;
    if (!global.config_path.empty()) cfg.load_file(global.config_path);
    cfg.apply_environment(env ? *env : AppConfig::process_environment());
    for (const auto& kv : global.overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw UsageError("--set expects key=value, got \"" + kv + "\"");
      cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (global.seed) cfg.set("grpo.seed", std::to_string(*global.seed));
    const auto seed = static_cast<std::uint64_t>(cfg.get_int("grpo.seed"));

    if (*index_cmd) {
      code = cmd_index(index_args, cfg, err);
    } else if (*search_cmd) {
      code = cmd_search(search_args, cfg, out);
    } else if (*curate_cmd) {
      code = cmd_curate(curate_args, seed, err);
    } else if (*reward_cmd) {
      code = cmd_reward(reward_args, cfg, out);
    } else if (*train_cmd) {
      code = cmd_train(train_args, cfg, out, err);
    } else if (*re_cmd) {
      code = cmd_rewrite_eval(re_args, cfg, out);
    } else if (*cmp_cmd) {
      code = cmd_compare(cmp_args, out);
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    code = kUsageError;
  } catch (const RemoteError& e) {
    err << "error: " << e.what() << '\n';
    code = kRemoteError;
  } catch (const DataError& e) {
    err << "error: " << e.what() << '\n';
    code = kDataError;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    code = kUsageError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    code = kDataError;
  }
  set_warnings_enabled(true);
  return code;
}

}  // namespace qrt::cli
