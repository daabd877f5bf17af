#include "attribeval/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <unordered_set>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "attribeval/features.hpp"
#include "text_util.hpp"

namespace attribeval::cli {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string number_text(double v) { return json(v).dump(); }

std::filesystem::path report_path(const std::filesystem::path& out_dir, report::Format format) {
  return out_dir / (std::string(kReportStem) + std::string(report::file_extension(format)));
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
}

/// Accumulates the run manifest and writes it when the command finishes.
class RunManifest {
 public:
  explicit RunManifest(std::string command) : started_(utc_timestamp()) {
    doc_["command"] = std::move(command);
  }

  void config(json snapshot) { doc_["config_snapshot"] = std::move(snapshot); }
  void input(const std::filesystem::path& p) { inputs_.push_back(p.string()); }
  void output(const std::filesystem::path& p) { outputs_.push_back(p.string()); }

  void write(const std::filesystem::path& out_dir) {
    doc_["input_paths"] = inputs_;
    doc_["output_paths"] = outputs_;
    doc_["started"] = started_;
    doc_["finished"] = utc_timestamp();
    text::write_file_atomic(out_dir / kManifestFile, doc_.dump(2) + "\n");
  }

 private:
  ordered_json doc_;
  std::vector<std::string> inputs_;
  std::vector<std::string> outputs_;
  std::string started_;
};

void write_report(const report::EvalReport& rep, report::Format format,
                  const std::filesystem::path& out_dir, RunManifest& manifest) {
  const auto path = report_path(out_dir, format);
  text::write_file_atomic(path, report::emit(rep, format));
  manifest.output(path);
}

std::map<std::string, std::string> zeroshot_metadata(const std::string& model,
                                                     std::uint64_t seed) {
  return {{"model", model},
          {"seed", std::to_string(seed)},
          {"template_version", std::string(prompting::kTemplateVersion)}};
}

}  // namespace

std::string format_prediction(const PredictionLine& line) {
  ordered_json obj;
  obj["id"] = line.id;
  obj["raw_text"] = line.raw_text;
  obj["verdict"] = line.verdict;
  obj["predicted_label"] = label_code(line.predicted_label);
  obj["cached"] = line.cached;
  obj["latency_ms"] = line.latency_ms;
  if (!line.error.empty()) obj["error"] = line.error;
  return obj.dump();
}

std::vector<PredictionLine> load_predictions(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open predictions file: " + path.string());
  const auto path_str = path.string();
  std::vector<PredictionLine> lines;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (text::trim(raw).empty()) continue;
    json obj;
    try {
      obj = json::parse(raw);
    } catch (const json::parse_error& e) {
      throw SchemaError(path_str, line_no, "<line>", std::string("invalid JSON: ") + e.what());
    }
    auto str = [&](const char* key) {
      if (!obj.is_object() || !obj.contains(key) || !obj[key].is_string())
        throw SchemaError(path_str, line_no, key, "missing or not a string");
      return obj[key].get<std::string>();
    };
    PredictionLine p;
    p.id = str("id");
    p.raw_text = str("raw_text");
    p.verdict = str("verdict");
    if (p.verdict != "YES" && p.verdict != "NO" && p.verdict != "UNPARSEABLE" &&
        p.verdict != "ERROR")
      throw SchemaError(path_str, line_no, "verdict", "expected YES, NO, UNPARSEABLE or ERROR");
    const auto label = parse_label_code(str("predicted_label"));
    if (!label) throw SchemaError(path_str, line_no, "predicted_label", "expected \"Y\" or \"N\"");
    p.predicted_label = *label;
    if (!obj.contains("cached") || !obj["cached"].is_boolean())
      throw SchemaError(path_str, line_no, "cached", "missing or not a boolean");
    p.cached = obj["cached"].get<bool>();
    if (!obj.contains("latency_ms") || !obj["latency_ms"].is_number())
      throw SchemaError(path_str, line_no, "latency_ms", "missing or not a number");
    p.latency_ms = obj["latency_ms"].get<double>();
    if (obj.contains("error")) p.error = str("error");
    lines.push_back(std::move(p));
  }
  return lines;
}

std::vector<metrics::MetricsRow> score_by_subset(
    std::span<const dataset::AttributionRecord> records,
    const std::unordered_map<std::string, PredictionLine>& predictions) {
  struct Group {
    std::string subset;
    Split split;
    std::vector<Label> preds;
    std::vector<Label> golds;
    std::uint64_t unparsed = 0;
  };
  std::vector<Group> groups;
  for (const auto& rec : records) {
    const auto it = predictions.find(rec.id);
    if (it == predictions.end()) continue;
    auto g = std::find_if(groups.begin(), groups.end(), [&](const Group& group) {
      return group.subset == rec.subset && group.split == rec.split;
    });
    if (g == groups.end()) {
      groups.push_back({rec.subset, rec.split, {}, {}, 0});
      g = std::prev(groups.end());
    }
    g->preds.push_back(it->second.predicted_label);
    g->golds.push_back(rec.label);
    if (it->second.counts_as_unparsed()) ++g->unparsed;
  }
  std::vector<metrics::MetricsRow> rows;
  for (auto& g : groups)
    rows.push_back(metrics::make_row(g.subset, g.split, metrics::confusion(g.preds, g.golds),
                                     g.unparsed));
  return rows;
}

std::optional<std::string> getenv_lookup(const std::string& name) {
  const char* v = std::getenv(name.c_str());
  if (v == nullptr) return std::nullopt;
  return std::string(v);
}

llm::ModelConfig resolve_model_config(const ModelFlags& flags, const EnvLookup& env,
                                      const json& config_file) {
  if (!config_file.is_null() && !config_file.is_object())
    throw Error("config file must hold a JSON object");
  llm::ModelConfig cfg;
  auto from_file = [&](const char* key, auto& target) {
    if (config_file.is_object() && config_file.contains(key)) {
      try {
        config_file.at(key).get_to(target);
      } catch (const json::exception&) {
        throw Error(std::string("config file key '") + key + "' has the wrong type");
      }
    }
  };
  auto from_env = [&](const char* name, std::string& target) {
    if (env) {
      if (auto v = env(name); v && !v->empty()) target = *v;
    }
  };

  from_file("model", cfg.model_name);
  from_env("ATTRIBEVAL_MODEL", cfg.model_name);
  if (flags.model) cfg.model_name = *flags.model;

  from_file("endpoint", cfg.endpoint_url);
  from_env("ATTRIBEVAL_ENDPOINT", cfg.endpoint_url);
  if (flags.endpoint) cfg.endpoint_url = *flags.endpoint;

  from_file("api_key_env", cfg.api_key_env);
  if (flags.api_key_env) cfg.api_key_env = *flags.api_key_env;

  from_file("temperature", cfg.temperature);
  if (flags.temperature) cfg.temperature = *flags.temperature;
  from_file("max_output_tokens", cfg.max_output_tokens);
  if (flags.max_output_tokens) cfg.max_output_tokens = *flags.max_output_tokens;
  from_file("timeout_seconds", cfg.timeout_seconds);
  if (flags.timeout_seconds) cfg.timeout_seconds = *flags.timeout_seconds;
  from_file("max_retries", cfg.max_retries);
  if (flags.max_retries) cfg.max_retries = *flags.max_retries;

  cfg.validate();
  return cfg;
}

int cmd_zeroshot(const ZeroShotOptions& options, std::ostream& err) {
  try {
    if (!std::filesystem::exists(options.dataset_path)) {
      err << "error: dataset file not found: " << options.dataset_path.string() << "\n";
      return 1;
    }
    RunManifest manifest("zeroshot");
    manifest.input(options.dataset_path);

    const auto all = dataset::load_dataset(options.dataset_path);
    const auto records = dataset::filter(all, options.subset, options.split);
    if (records.empty()) {
      err << "error: no records to evaluate in " << options.dataset_path.string() << "\n";
      return 1;
    }

    std::vector<prompting::PromptBundle> prompts;
    prompts.reserve(records.size());
    for (const auto& rec : records) prompts.push_back(prompting::render_prompt(rec, options.prompt));

    std::shared_ptr<llm::Backend> backend = options.backend;
    if (!backend && options.replay_path) {
      backend = llm::ReplayBackend::from_file(*options.replay_path);
      manifest.input(*options.replay_path);
    }
    if (!backend) {
      if (options.model.endpoint_url.empty()) {
        err << "error: no endpoint configured; pass --endpoint or --replay\n";
        return 1;
      }
      backend = std::make_shared<llm::HttpBackend>();
    }
    llm::Client client(options.model, backend, options.cache_dir, options.retry);
    const auto entries = client.run_batch(prompts, options.parallelism);

    std::vector<PredictionLine> lines;
    lines.reserve(entries.size());
    for (const auto& entry : entries) {
      PredictionLine line;
      line.id = entry.record_id;
      if (entry.ok()) {
        const auto verdict = prompting::parse_verdict(entry.result->raw_text);
        line.raw_text = verdict.raw;
        line.verdict = std::string(prompting::to_string(verdict.value));
        // The policy is applied after predictions are persisted.
        line.predicted_label = prompting::verdict_to_prediction(
            verdict, prompting::UnparsePolicy::AsNegative, entry.record_id);
        line.cached = entry.result->cached;
        line.latency_ms = entry.result->latency_ms;
      } else {
        line.verdict = "ERROR";
        line.error = entry.error;
        spdlog::warn("record '{}': {}", entry.record_id, entry.error);
      }
      lines.push_back(std::move(line));
    }

    ensure_dir(options.out_dir);
    std::string predictions_text;
    for (const auto& line : lines) predictions_text += format_prediction(line) + "\n";
    const auto predictions_path = options.out_dir / kPredictionsFile;
    text::write_file_atomic(predictions_path, predictions_text);
    manifest.output(predictions_path);

    std::unordered_map<std::string, PredictionLine> by_id;
    for (const auto& line : lines) {
      if (line.counts_as_unparsed() && options.policy == prompting::UnparsePolicy::AsError) {
        throw prompting::UnparseableVerdictError(
            line.id, line.verdict == "ERROR" ? "request failed: " + line.error : line.raw_text);
      }
      by_id.emplace(line.id, line);
    }

    auto rep = report::build_report(std::string(kZeroShotTitle), score_by_subset(records, by_id),
                                    zeroshot_metadata(options.model.model_name, options.seed));
    write_report(rep, options.format, options.out_dir, manifest);

    auto snapshot = options.model.snapshot();
    snapshot["parallelism"] = options.parallelism;
    snapshot["seed"] = options.seed;
    snapshot["reference_budget"] = options.prompt.reference_budget;
    snapshot["template_version"] = prompting::kTemplateVersion;
    snapshot["unparseable"] =
        options.policy == prompting::UnparsePolicy::AsError ? "error" : "negative";
    if (options.subset) snapshot["subset"] = *options.subset;
    if (options.split) snapshot["split"] = to_string(*options.split);
    if (options.cache_dir) snapshot["cache_dir"] = options.cache_dir->string();
    manifest.config(std::move(snapshot));
    manifest.write(options.out_dir);
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

int cmd_probe(const ProbeOptions& options, std::ostream& err) {
  try {
    RunManifest manifest("probe");
    manifest.input(options.features_path);
    const auto file = probe::load_feature_file(options.features_path);
    for (const int layer : options.layers) {
      if (layer < 1 || static_cast<std::size_t>(layer) > file.manifest.layer_count())
        throw Error("layer " + std::to_string(layer) + " is not declared by the feature manifest");
    }
    const auto rows = probe::layer_sweep(file.by_layer, options.sweep, options.layers);

    const auto& train = options.sweep.train;
    std::map<std::string, std::string> metadata{
        {"model", file.manifest.model_id},
        {"pooling", file.manifest.pooling},
        {"protocol", std::string(probe::to_string(options.sweep.protocol))},
        {"seed", std::to_string(train.seed)},
        {"epochs", std::to_string(train.epochs)},
        {"learning_rate", number_text(train.learning_rate)},
        {"l2", number_text(train.l2)},
        {"template_version", std::string(prompting::kTemplateVersion)}};
    auto rep = report::build_report(std::string(kProbeTitle), rows, std::move(metadata));

    ensure_dir(options.out_dir);
    write_report(rep, options.format, options.out_dir, manifest);
    manifest.config(json{{"layers", options.layers},
                         {"protocol", probe::to_string(options.sweep.protocol)},
                         {"seed", train.seed},
                         {"epochs", train.epochs},
                         {"learning_rate", train.learning_rate},
                         {"l2", train.l2},
                         {"decision_threshold", train.decision_threshold},
                         {"feature_manifest", file.manifest.to_json()}});
    manifest.write(options.out_dir);
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

int cmd_metrics(const MetricsOptions& options, std::ostream& err) {
  try {
    RunManifest manifest("metrics");
    manifest.input(options.predictions_path);
    manifest.input(options.dataset_path);
    const auto lines = load_predictions(options.predictions_path);
    if (lines.empty()) {
      err << "error: predictions file is empty: " << options.predictions_path.string() << "\n";
      return 1;
    }
    const auto records = dataset::load_dataset(options.dataset_path);
    std::unordered_set<std::string> known;
    for (const auto& rec : records) known.insert(rec.id);

    std::unordered_map<std::string, PredictionLine> by_id;
    for (const auto& line : lines) {
      if (!known.contains(line.id))
        throw Error("prediction for unknown record id '" + line.id + "'");
      if (!by_id.emplace(line.id, line).second)
        throw Error("duplicate prediction for record id '" + line.id + "'");
    }

    auto rep = report::build_report(std::string(kZeroShotTitle), score_by_subset(records, by_id),
                                    zeroshot_metadata(options.model_name, options.seed));
    ensure_dir(options.out_dir);
    write_report(rep, options.format, options.out_dir, manifest);
    manifest.config(json{{"model_name", options.model_name}, {"seed", options.seed}});
    manifest.write(options.out_dir);
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

namespace {

struct DatasetArgs {
  std::string path;
  std::optional<std::string> subset;
  std::optional<std::string> split;

  std::vector<dataset::AttributionRecord> load() const {
    std::optional<Split> parsed;
    if (split) {
      parsed = parse_split(*split);
      if (!parsed) throw Error("--split must be id or ood");
    }
    return dataset::filter(dataset::load_dataset(path), subset, parsed);
  }
};

void add_dataset_args(CLI::App* cmd, DatasetArgs& args) {
  cmd->add_option("--dataset", args.path, "Line-delimited dataset file")->required();
  cmd->add_option("--subset", args.subset, "Keep only this subset");
  cmd->add_option("--split", args.split, "Keep only this split (id or ood)");
}

void add_model_flags(CLI::App* cmd, ModelFlags& flags) {
  cmd->add_option("--model", flags.model, "Model name sent to the endpoint");
  cmd->add_option("--endpoint", flags.endpoint, "Chat-completions URL");
  cmd->add_option("--api-key-env", flags.api_key_env,
                  "Environment variable holding the API key (default ATTRIBEVAL_API_KEY)");
  cmd->add_option("--temperature", flags.temperature);
  cmd->add_option("--max-tokens", flags.max_output_tokens);
  cmd->add_option("--timeout", flags.timeout_seconds, "Request timeout in seconds");
  cmd->add_option("--max-retries", flags.max_retries);
}

json read_config_file(const std::optional<std::string>& path) {
  if (!path) return json();
  try {
    return json::parse(text::read_file(*path));
  } catch (const json::parse_error& e) {
    throw Error("config file " + *path + " is not valid JSON: " + e.what());
  }
}

report::Format parse_format_flag(const std::string& text) {
  const auto format = report::parse_format(text);
  if (!format) throw Error("--format must be markdown or csv");
  return *format;
}

void write_lines_out(const std::optional<std::string>& out_path, const std::string& body,
                     std::ostream& out) {
  if (out_path) text::write_file_atomic(*out_path, body);
  else out << body;
}

}  // namespace

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Attribution evaluation: zero-shot entailment prompting and attention probes",
               "attribeval"};
  app.require_subcommand(1);
  std::optional<std::string> config_path;
  app.add_option("--config", config_path, "JSON config file");

  // zeroshot
  auto* zs = app.add_subcommand("zeroshot", "Prompt a model for every record and score it");
  DatasetArgs zs_data;
  ModelFlags zs_model;
  std::optional<std::string> zs_replay;
  std::optional<std::string> zs_cache;
  std::optional<int> zs_parallelism;
  std::string zs_out;
  std::string zs_format = "markdown";
  std::uint64_t zs_seed = 0;
  std::string zs_unparseable = "negative";
  std::size_t zs_budget = prompting::kDefaultReferenceBudget;
  add_dataset_args(zs, zs_data);
  add_model_flags(zs, zs_model);
  zs->add_option("--replay", zs_replay, "Replay fixture of {digest, raw_text} lines");
  zs->add_option("--cache-dir", zs_cache, "On-disk completion cache");
  zs->add_option("--parallelism", zs_parallelism, "Concurrent requests (default 4)");
  zs->add_option("--out", zs_out, "Output directory")->required();
  zs->add_option("--format", zs_format, "markdown or csv");
  zs->add_option("--seed", zs_seed);
  zs->add_option("--unparseable", zs_unparseable, "negative or error");
  zs->add_option("--reference-budget", zs_budget, "REFERENCE section budget in characters");

  // probe
  auto* pr = app.add_subcommand("probe", "Train one attention probe per layer and tabulate");
  std::string pr_features;
  std::vector<int> pr_layers;
  std::string pr_protocol = "holdout80_20";
  std::string pr_out;
  std::string pr_format = "markdown";
  probe::TrainConfig pr_train;
  pr->add_option("--features", pr_features, "Feature file")->required();
  pr->add_option("--layer", pr_layers, "Layer index to include (repeatable)")->delimiter(',');
  pr->add_option("--protocol", pr_protocol, "holdout80_20 or train_equals_eval");
  pr->add_option("--seed", pr_train.seed);
  pr->add_option("--epochs", pr_train.epochs);
  pr->add_option("--lr", pr_train.learning_rate);
  pr->add_option("--l2", pr_train.l2);
  pr->add_option("--out", pr_out, "Output directory")->required();
  pr->add_option("--format", pr_format, "markdown or csv");

  // metrics
  auto* me = app.add_subcommand("metrics", "Re-score persisted predictions");
  std::string me_predictions;
  std::string me_dataset;
  std::string me_out;
  std::string me_format = "markdown";
  std::optional<std::string> me_model;
  std::uint64_t me_seed = 0;
  me->add_option("--predictions", me_predictions, "predictions.jsonl from zeroshot")->required();
  me->add_option("--dataset", me_dataset, "Dataset the predictions refer to")->required();
  me->add_option("--out", me_out, "Output directory")->required();
  me->add_option("--format", me_format, "markdown or csv");
  me->add_option("--model", me_model, "Model name recorded in the report header");
  me->add_option("--seed", me_seed);

  // render
  auto* rd = app.add_subcommand("render", "Write rendered prompts as {id, text, ...} lines");
  DatasetArgs rd_data;
  std::optional<std::string> rd_out;
  std::size_t rd_budget = prompting::kDefaultReferenceBudget;
  add_dataset_args(rd, rd_data);
  rd->add_option("--out", rd_out, "Output file (default stdout)");
  rd->add_option("--reference-budget", rd_budget);

  // balance
  auto* bl = app.add_subcommand("balance", "Draw a class-balanced sample of a dataset");
  DatasetArgs bl_data;
  std::size_t bl_per_class = 0;
  std::uint64_t bl_seed = 0;
  std::optional<std::string> bl_out;
  add_dataset_args(bl, bl_data);
  bl->add_option("--per-class", bl_per_class, "Records per label")->required();
  bl->add_option("--seed", bl_seed);
  bl->add_option("--out", bl_out, "Output file (default stdout)");

  // digests
  auto* dg = app.add_subcommand("digests", "Print the cache digest of every record's prompt");
  DatasetArgs dg_data;
  ModelFlags dg_model;
  std::optional<std::string> dg_out;
  std::size_t dg_budget = prompting::kDefaultReferenceBudget;
  add_dataset_args(dg, dg_data);
  add_model_flags(dg, dg_model);
  dg->add_option("--out", dg_out, "Output file (default stdout)");
  dg->add_option("--reference-budget", dg_budget);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    err << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    const auto config_file = read_config_file(config_path);

    if (*zs) {
      ZeroShotOptions opts;
      opts.dataset_path = zs_data.path;
      opts.subset = zs_data.subset;
      if (zs_data.split) {
        opts.split = parse_split(*zs_data.split);
        if (!opts.split) throw Error("--split must be id or ood");
      }
      opts.model = resolve_model_config(zs_model, getenv_lookup, config_file);
      if (zs_replay) opts.replay_path = *zs_replay;
      if (zs_cache) opts.cache_dir = *zs_cache;
      else if (config_file.is_object() && config_file.contains("cache_dir"))
        opts.cache_dir = config_file["cache_dir"].get<std::string>();
      if (zs_parallelism) opts.parallelism = *zs_parallelism;
      else if (config_file.is_object() && config_file.contains("parallelism"))
        opts.parallelism = config_file["parallelism"].get<int>();
      if (opts.parallelism < 1) throw Error("--parallelism must be >= 1");
      opts.out_dir = zs_out;
      opts.format = parse_format_flag(zs_format);
      opts.seed = zs_seed;
      if (zs_unparseable == "error") opts.policy = prompting::UnparsePolicy::AsError;
      else if (zs_unparseable != "negative") throw Error("--unparseable must be negative or error");
      opts.prompt.reference_budget = zs_budget;
      return cmd_zeroshot(opts, err);
    }
    if (*pr) {
      ProbeOptions opts;
      opts.features_path = pr_features;
      opts.layers = pr_layers;
      const auto protocol = probe::parse_protocol(pr_protocol);
      if (!protocol) throw Error("--protocol must be holdout80_20 or train_equals_eval");
      opts.sweep.protocol = *protocol;
      opts.sweep.train = pr_train;
      opts.out_dir = pr_out;
      opts.format = parse_format_flag(pr_format);
      return cmd_probe(opts, err);
    }
    if (*me) {
      MetricsOptions opts;
      opts.predictions_path = me_predictions;
      opts.dataset_path = me_dataset;
      opts.out_dir = me_out;
      opts.format = parse_format_flag(me_format);
      ModelFlags flags;
      flags.model = me_model;
      opts.model_name = resolve_model_config(flags, getenv_lookup, config_file).model_name;
      opts.seed = me_seed;
      return cmd_metrics(opts, err);
    }
    if (*rd) {
      std::string body;
      prompting::PromptOptions popts{rd_budget};
      for (const auto& rec : rd_data.load()) {
        const auto bundle = prompting::render_prompt(rec, popts);
        ordered_json obj;
        obj["id"] = bundle.record_id;
        obj["text"] = bundle.text;
        obj["template_version"] = bundle.template_version;
        obj["label"] = label_code(rec.label);
        body += obj.dump() + "\n";
      }
      write_lines_out(rd_out, body, out);
      return 0;
    }
    if (*bl) {
      std::string body;
      for (const auto& rec : dataset::balance(bl_data.load(), bl_per_class, bl_seed))
        body += dataset::to_json_line(rec) + "\n";
      write_lines_out(bl_out, body, out);
      return 0;
    }
    if (*dg) {
      const auto cfg = resolve_model_config(dg_model, getenv_lookup, config_file);
      prompting::PromptOptions popts{dg_budget};
      std::string body;
      for (const auto& rec : dg_data.load()) {
        ordered_json obj;
        obj["id"] = rec.id;
        obj["digest"] = llm::cache_key(cfg, prompting::render_prompt(rec, popts).text);
        body += obj.dump() + "\n";
      }
      write_lines_out(dg_out, body, out);
      return 0;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace attribeval::cli
