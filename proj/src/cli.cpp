#include "pesem/cli.hpp"

#include "pesem/classifier.hpp"
#include "pesem/error.hpp"
#include "pesem/featurize.hpp"
#include "pesem/manifest.hpp"
#include "pesem/metrics.hpp"
#include "pesem/pipeline.hpp"
#include "pesem/token_budget.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <iostream>
#include <mutex>
#include <thread>

namespace pesem::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

int exit_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::Io: return kNotFound;
    case ErrorCode::NotPe:
    case ErrorCode::Truncated:
    case ErrorCode::Unsupported:
    case ErrorCode::UnmappedRva: return kParseFailure;
    default: return kSchemaFailure;
  }
}

struct Flags {
  std::string config_path;
  std::string rules;
  std::vector<std::string> weights;
  double packed_threshold = 0.5;
  std::size_t budget = 512;
  std::uint64_t seed = 0;
  std::string out;
  bool fit = false;
  unsigned jobs = 0;

  std::string file;
  std::string dir;
  std::string pack;
  std::string reports;
  std::string manifest;
  std::string model;
  double split = 0.8;
  int epochs = Hyper{}.epochs;
  double learning_rate = Hyper{}.learning_rate;
  double l2 = Hyper{}.l2;
  bool all = false;
  std::string json_out;
};

struct Context {
  std::ostream& out;
  std::ostream& err;
  std::mutex log_mutex;

  void log(const std::string& line) {
    std::lock_guard lock(log_mutex);
    err << line << '\n';
  }
};

template <class F>
void parallel_for(std::size_t n, unsigned jobs, F&& body) {
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, std::max<std::size_t>(n, 1)));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next++) < n;) body(i);
  };
  std::vector<std::thread> threads;
  for (unsigned j = 1; j < jobs; ++j) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();
}

std::vector<fs::path> files_in(const fs::path& dir, std::string_view extension = {}) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    if (!extension.empty() && e.path().extension() != extension) continue;
    files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

void require_directory(const std::string& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw Error(ErrorCode::Io, "not a directory: " + dir);
}

void require_file(const std::string& path) {
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) throw Error(ErrorCode::Io, "no such file: " + path);
}

std::pair<std::string, double> parse_weight_flag(const std::string& flag) {
  const auto eq = flag.find('=');
  if (eq == std::string::npos || eq == 0) throw Error(ErrorCode::SchemaError, "--weight expects id=value, got '" + flag + "'");
  const std::string value = flag.substr(eq + 1);
  std::size_t used = 0;
  double w = 0.0;
  try {
    w = std::stod(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != value.size()) throw Error(ErrorCode::SchemaError, "--weight value is not a number: '" + flag + "'");
  return {flag.substr(0, eq), w};
}

// Config file first, explicit flags on top.
CliConfig resolve_config(const Flags& f, const CLI::App& app) {
  CliConfig cfg;
  if (!f.config_path.empty()) {
    require_file(f.config_path);
    cfg = parse_cli_config(read_text_file(f.config_path));
  }
  auto given = [&](const char* name) { return app.get_option(name)->count() > 0; };
  if (given("--rules")) cfg.rule_pack = f.rules;
  for (const auto& w : f.weights) {
    auto [id, value] = parse_weight_flag(w);
    cfg.weights[id] = value;
  }
  if (given("--packed-threshold")) cfg.packed_threshold = f.packed_threshold;
  if (given("--budget")) cfg.budget = f.budget;
  if (given("--seed")) cfg.seed = f.seed;
  if (given("--out")) cfg.out = f.out;
  if (cfg.budget == 0) throw Error(ErrorCode::SchemaError, "token budget must be positive");
  for (const auto& [id, w] : cfg.weights)
    if (!(w > 0.0)) throw Error(ErrorCode::NonPositiveWeight, "weight of detector '" + id + "' must be positive");
  return cfg;
}

AnalyzerConfig analyzer_config(const CliConfig& cfg) {
  AnalyzerConfig a;
  if (cfg.rule_pack) {
    require_file(*cfg.rule_pack);
    a.rules = std::make_shared<const RulePack>(load_rule_pack_file(*cfg.rule_pack));
  }
  a.packing.weights = cfg.weights;
  a.packing.likely_packed_threshold = cfg.packed_threshold;
  validate(a.packing);
  return a;
}

std::string render_report(const Report& report, const CliConfig& cfg, bool fit) {
  return serialize_report(fit ? fit_to_budget(report, TokenBudget{cfg.budget}) : report);
}

int cmd_analyze(Context& ctx, const Flags& f, const CliConfig& cfg) {
  require_file(f.file);
  const AnalyzerConfig acfg = analyzer_config(cfg);
  const Report report = analyze_file(f.file, acfg);
  const std::string text = render_report(report, cfg, f.fit);
  if (!cfg.out) {
    ctx.out << text;
    return kOk;
  }
  fs::path target = *cfg.out;
  std::error_code ec;
  if (fs::is_directory(target, ec)) target /= report_file_name(report);
  write_file_atomic(target, text);
  return kOk;
}

int cmd_batch(Context& ctx, const Flags& f, const CliConfig& cfg) {
  require_directory(f.dir);
  if (!cfg.out) throw Error(ErrorCode::SchemaError, "batch needs an output directory (--out)");
  const fs::path out_dir = *cfg.out;
  fs::create_directories(out_dir);
  const AnalyzerConfig acfg = analyzer_config(cfg);
  const auto files = files_in(f.dir);

  std::atomic<std::size_t> written{0}, failed{0};
  parallel_for(files.size(), f.jobs, [&](std::size_t i) {
    const auto& path = files[i];
    try {
      const Report report = analyze_file(path, acfg);
      write_file_atomic(out_dir / report_file_name(report), render_report(report, cfg, f.fit));
      ++written;
    } catch (const Error& e) {
      ++failed;
      ctx.log("error: " + path.string() + ": " + std::string(to_string(e.code())) + ": " + e.what());
    } catch (const std::exception& e) {
      ++failed;
      ctx.log("error: " + path.string() + ": " + e.what());
    }
  });
  ctx.out << "batch: " << files.size() << " files, " << written.load() << " reports, " << failed.load() << " failures\n";
  return kOk;
}

int cmd_rules_validate(Context& ctx, const Flags& f) {
  require_file(f.pack);
  const RulePack pack = load_rule_pack_file(f.pack);
  ctx.out << f.pack << ": valid, " << pack.rules.size() << " rules, version " << pack.version << "\n";
  return kOk;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

int cmd_tokens(Context& ctx, const Flags& f, const CliConfig& cfg) {
  require_directory(f.dir);
  const auto files = files_in(f.dir, ".json");
  std::vector<std::size_t> counts(files.size());
  parallel_for(files.size(), f.jobs, [&](std::size_t i) { counts[i] = count_tokens(read_text_file(files[i])); });
  const auto s = token_statistics(counts, cfg.budget);
  ctx.out << "reports " << s.count << "\n"
          << "mean " << fixed(s.mean, 2) << "\n"
          << "median " << fixed(s.median, 2) << "\n"
          << "max " << s.max << "\n"
          << "over_" << cfg.budget << " " << fixed(s.fraction_over_limit, 4) << "\n";
  return kOk;
}

struct Dataset {
  std::vector<LabeledVector> rows;
  std::size_t missing = 0;
};

Dataset load_dataset(Context& ctx, const std::vector<ManifestEntry>& entries, const fs::path& reports, unsigned jobs) {
  std::vector<std::optional<FeatureVector>> features(entries.size());
  parallel_for(entries.size(), jobs, [&](std::size_t i) {
    const auto path = reports / (entries[i].sha256 + ".json");
    try {
      features[i] = featurize_text(read_text_file(path));
    } catch (const Error&) {
      ctx.log("missing report: " + path.string());
    }
  });
  Dataset d;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (!features[i]) {
      ++d.missing;
      continue;
    }
    d.rows.push_back({std::move(*features[i]), *category_index(entries[i].category)});
  }
  if (d.missing) ctx.log("skipped " + std::to_string(d.missing) + " manifest entries without a report");
  return d;
}

std::vector<std::string> category_names() { return {kCategories.begin(), kCategories.end()}; }

ClassificationReport score(const Model& model, const std::vector<LabeledVector>& rows) {
  std::vector<std::size_t> predicted, labels;
  for (const auto& r : rows) {
    predicted.push_back(predict(model, r.features));
    labels.push_back(r.label);
  }
  return classification_metrics(predicted, labels, category_names());
}

void emit_metrics(Context& ctx, const ClassificationReport& rep, std::string_view title, const std::string& json_out) {
  ctx.out << render_table(rep, title);
  if (!json_out.empty()) write_file_atomic(json_out, metrics_to_json(rep));
}

int cmd_train(Context& ctx, const Flags& f, const CliConfig& cfg) {
  require_directory(f.reports);
  require_file(f.manifest);
  const auto manifest = read_manifest(f.manifest);
  const Split split = stratified_split(manifest, f.split, cfg.seed);
  const Dataset train = load_dataset(ctx, split.train, f.reports, f.jobs);

  Hyper hyper;
  hyper.learning_rate = f.learning_rate;
  hyper.epochs = f.epochs;
  hyper.l2 = f.l2;
  hyper.seed = cfg.seed;
  Model model = train_classifier(train.rows, kCategories.size(), hyper);
  model.split = SplitParams{f.split, cfg.seed};
  save_model(model, f.model);

  emit_metrics(ctx, score(model, train.rows), "Training classification report", f.json_out);
  return kOk;
}

int cmd_eval(Context& ctx, const Flags& f) {
  require_file(f.model);
  require_directory(f.reports);
  require_file(f.manifest);
  const Model model = load_model(f.model);
  const auto manifest = read_manifest(f.manifest);
  std::vector<ManifestEntry> entries = manifest;
  if (!f.all && model.split) entries = stratified_split(manifest, model.split->ratio, model.split->seed).test;
  const Dataset data = load_dataset(ctx, entries, f.reports, f.jobs);
  if (data.rows.empty()) throw Error(ErrorCode::SchemaError, "no reports to evaluate");
  emit_metrics(ctx, score(model, data.rows), f.all ? "Classification report" : "Testing classification report",
               f.json_out);
  return kOk;
}

}  // namespace

CliConfig parse_cli_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::SchemaError, std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::SchemaError, "config must be a JSON object");
  CliConfig cfg;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "rule_pack") {
        cfg.rule_pack = value.get<std::string>();
      } else if (key == "weights") {
        if (!value.is_object()) throw Error(ErrorCode::SchemaError, "config: weights must be an object");
        for (const auto& [id, w] : value.items()) {
          if (!w.is_number()) throw Error(ErrorCode::SchemaError, "config: weight of '" + id + "' must be a number");
          cfg.weights[id] = w.get<double>();
        }
      } else if (key == "packed_threshold") {
        if (!value.is_number()) throw Error(ErrorCode::SchemaError, "config: packed_threshold must be a number");
        cfg.packed_threshold = value.get<double>();
      } else if (key == "budget") {
        if (!value.is_number_unsigned()) throw Error(ErrorCode::SchemaError, "config: budget must be a positive integer");
        cfg.budget = value.get<std::size_t>();
      } else if (key == "out") {
        cfg.out = value.get<std::string>();
      } else if (key == "seed") {
        if (!value.is_number_unsigned()) throw Error(ErrorCode::SchemaError, "config: seed must be a non-negative integer");
        cfg.seed = value.get<std::uint64_t>();
      } else {
        throw Error(ErrorCode::SchemaError, "config: unknown key '" + key + "'");
      }
    }
  } catch (const json::type_error& e) {
    throw Error(ErrorCode::SchemaError, std::string("config: ") + e.what());
  }
  return cfg;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Flags f;
  CLI::App app{"Semantic preprocessing of PE files into JSON reports", "pesem"};
  app.fallthrough();
  app.require_subcommand(1);
  app.add_option("--config", f.config_path, "JSON file with default settings");
  app.add_option("--rules", f.rules, "Rule pack (JSON) replacing the bundled one");
  app.add_option("--weight", f.weights, "Detector weight as id=value (repeatable)");
  app.add_option("--packed-threshold", f.packed_threshold, "Packing label at or above which a file counts as packed");
  app.add_option("--budget", f.budget, "Token budget for --fit and the tokens statistics");
  app.add_option("--seed", f.seed, "Seed for the split and the training order");
  app.add_option("-o,--out", f.out, "Output file (analyze) or directory (batch)");
  app.add_option("-j,--jobs", f.jobs, "Worker threads (0 picks the core count)");

  auto* analyze_cmd = app.add_subcommand("analyze", "Write the report of one file");
  analyze_cmd->add_option("file", f.file)->required();
  analyze_cmd->add_flag("--fit", f.fit, "Truncate the report to the token budget");

  auto* batch_cmd = app.add_subcommand("batch", "Write one report per file of a directory");
  batch_cmd->add_option("dir", f.dir)->required();
  batch_cmd->add_flag("--fit", f.fit, "Truncate each report to the token budget");

  auto* rules_cmd = app.add_subcommand("rules", "Rule pack utilities");
  rules_cmd->require_subcommand(1);
  auto* validate_cmd = rules_cmd->add_subcommand("validate", "Check a rule pack");
  validate_cmd->add_option("pack", f.pack)->required();

  auto* tokens_cmd = app.add_subcommand("tokens", "Token statistics of a report directory");
  tokens_cmd->add_option("dir", f.dir)->required();

  auto* train_cmd = app.add_subcommand("train", "Train the baseline classifier");
  train_cmd->add_option("--reports", f.reports)->required();
  train_cmd->add_option("--manifest", f.manifest)->required();
  train_cmd->add_option("--split", f.split, "Train fraction")->check(CLI::Range(0.0, 1.0));
  train_cmd->add_option("--model", f.model)->required();
  train_cmd->add_option("--epochs", f.epochs)->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--learning-rate", f.learning_rate)->check(CLI::PositiveNumber);
  train_cmd->add_option("--l2", f.l2)->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--json", f.json_out, "Also write the metrics as JSON");

  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a trained model");
  eval_cmd->add_option("--model", f.model)->required();
  eval_cmd->add_option("--reports", f.reports)->required();
  eval_cmd->add_option("--manifest", f.manifest)->required();
  eval_cmd->add_flag("--all", f.all, "Score every manifest entry instead of the held-out split");
  eval_cmd->add_option("--json", f.json_out, "Also write the metrics as JSON");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  Context ctx{out, err};
  try {
    const CliConfig cfg = resolve_config(f, app);
    if (analyze_cmd->parsed()) return cmd_analyze(ctx, f, cfg);
    if (batch_cmd->parsed()) return cmd_batch(ctx, f, cfg);
    if (validate_cmd->parsed()) return cmd_rules_validate(ctx, f);
    if (tokens_cmd->parsed()) return cmd_tokens(ctx, f, cfg);
    if (train_cmd->parsed()) return cmd_train(ctx, f, cfg);
    if (eval_cmd->parsed()) return cmd_eval(ctx, f);
  } catch (const Error& e) {
    ctx.log("error: " + std::string(to_string(e.code())) + ": " + e.what());
    return exit_for(e.code());
  } catch (const std::filesystem::filesystem_error& e) {
    ctx.log(std::string("error: ") + e.what());
    return kNotFound;
  }
  return kUsage;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace pesem::cli
