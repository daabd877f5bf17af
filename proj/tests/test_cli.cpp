#include <gtest/gtest.h>

#include <sstream>

#include "attribeval/cli.hpp"
#include "test_support.hpp"

namespace attribeval::cli {
namespace {

using testing::TempDir;
using testing::data_path;
using testing::slurp;
using testing::spit;

struct RunResult {
  int code;
  std::string out;
  std::string err;
};

RunResult run_cli(std::vector<std::string> args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::size_t count_lines(const std::string& text, const std::string& prefix) {
  std::size_t n = 0;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) n += line.rfind(prefix, 0) == 0;
  return n;
}

std::filesystem::path write_replay(const TempDir& dir, const std::string& skip_id = {}) {
  const auto records = dataset::load_dataset(data_path("fixture_20.jsonl"));
  const auto path = dir / ("replay" + skip_id + ".jsonl");
  spit(path, testing::make_replay_fixture(records, llm::ModelConfig{}, skip_id));
  return path;
}

TEST(ZeroShot, ReplayHappyPath) {
  TempDir dir;
  const auto replay = write_replay(dir);
  const auto r = run_cli({"zeroshot", "--dataset", data_path("fixture_20.jsonl").string(), "--replay",
                          replay.string(), "--out", (dir / "out").string()});
  ASSERT_EQ(r.code, 0) << r.err;

  const auto predictions = load_predictions(dir / "out" / "predictions.jsonl");
  ASSERT_EQ(predictions.size(), 20u);
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    EXPECT_EQ(predictions[i].id, "fx-" + std::string(i < 10 ? "00" : "0") + std::to_string(i));
    EXPECT_TRUE(predictions[i].cached);
    EXPECT_EQ(predictions[i].latency_ms, 0.0);
    EXPECT_TRUE(predictions[i].verdict == "YES" || predictions[i].verdict == "NO");
  }
  const auto report = slurp(dir / "out" / "report.md");
  EXPECT_EQ(count_lines(report, "| ExpertQA | ID |"), 1u);
  EXPECT_EQ(count_lines(report, "| HAGRID | OOD |"), 1u);
  EXPECT_NE(report.find("- model: flan-ul2"), std::string::npos);
  EXPECT_NE(report.find("- template_version: entailment-v1"), std::string::npos);
  EXPECT_NE(report.find("OOD-Avg. F1 (unweighted mean over subsets)"), std::string::npos);

  const auto manifest = nlohmann::json::parse(slurp(dir / "out" / "manifest.json"));
  EXPECT_EQ(manifest["command"], "zeroshot");
  EXPECT_EQ(manifest["config_snapshot"]["model_name"], "flan-ul2");
  EXPECT_EQ(manifest["output_paths"].size(), 2u);
  EXPECT_TRUE(manifest.contains("started"));
}

TEST(ZeroShot, PredictionLineKeyOrder) {
  PredictionLine line{"a", "YES", "YES", Label::Attributable, true, 0, {}};
  EXPECT_EQ(format_prediction(line),
            R"({"id":"a","raw_text":"YES","verdict":"YES","predicted_label":"Y","cached":true,"latency_ms":0.0})");
  line.verdict = "ERROR";
  line.error = "boom";
  EXPECT_NE(format_prediction(line).find(R"("error":"boom")"), std::string::npos);
}

TEST(ZeroShot, OutputsIndependentOfParallelism) {
  TempDir dir;
  const auto replay = write_replay(dir);
  std::string first_pred;
  std::string first_report;
  for (const char* par : {"1", "8", "1"}) {
    const auto out = dir / (std::string("out") + par);
    const auto r = run_cli({"zeroshot", "--dataset", data_path("fixture_20.jsonl").string(),
                            "--replay", replay.string(), "--parallelism", par, "--out", out.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto pred = slurp(out / "predictions.jsonl");
    const auto rep = slurp(out / "report.md");
    if (first_pred.empty()) {
      first_pred = pred;
      first_report = rep;
    } else {
      EXPECT_EQ(pred, first_pred);
      EXPECT_EQ(rep, first_report);
    }
  }
}

TEST(ZeroShot, MissingDatasetNamesPath) {
  TempDir dir;
  const auto missing = (dir / "nope.jsonl").string();
  const auto r = run_cli({"zeroshot", "--dataset", missing, "--replay", "x", "--out", (dir / "o").string()});
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find(missing), std::string::npos);
  EXPECT_FALSE(std::filesystem::exists(dir / "o" / "report.md"));
}

TEST(ZeroShot, ReplayMissBecomesOneUnparsedRecord) {
  TempDir dir;
  const auto replay = write_replay(dir, "fx-006");
  const auto r = run_cli({"zeroshot", "--dataset", data_path("fixture_20.jsonl").string(), "--replay",
                          replay.string(), "--out", (dir / "out").string(), "--format", "csv"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::size_t errors = 0;
  for (const auto& p : load_predictions(dir / "out" / "predictions.jsonl")) {
    if (p.verdict == "ERROR") {
      ++errors;
      EXPECT_EQ(p.id, "fx-006");
      EXPECT_EQ(p.predicted_label, Label::NotAttributable);
      EXPECT_FALSE(p.error.empty());
    }
  }
  EXPECT_EQ(errors, 1u);
  // fx-006 belongs to the BEGIN subset (5 records).
  std::size_t flagged = 0;
  for (const auto& rec : report::parse_csv(slurp(dir / "out" / "report.csv"))) {
    if (rec.subset == "BEGIN") {
      EXPECT_EQ(rec.unparse_rate, 20.0);
      ++flagged;
    } else {
      EXPECT_EQ(rec.unparse_rate, 0.0);
    }
  }
  EXPECT_EQ(flagged, 1u);
}

TEST(ZeroShot, ErrorPolicyFailsAfterPersisting) {
  TempDir dir;
  const auto replay = write_replay(dir, "fx-006");
  const auto r = run_cli({"zeroshot", "--dataset", data_path("fixture_20.jsonl").string(), "--replay",
                          replay.string(), "--out", (dir / "out").string(), "--unparseable", "error"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("fx-006"), std::string::npos);
  EXPECT_TRUE(std::filesystem::exists(dir / "out" / "predictions.jsonl"));
  EXPECT_FALSE(std::filesystem::exists(dir / "out" / "report.md"));
}

TEST(ZeroShot, SubsetFilterAndBackendOverride) {
  TempDir dir;
  ZeroShotOptions opts;
  opts.dataset_path = data_path("fixture_20.jsonl");
  opts.subset = "LFQA";
  opts.out_dir = dir / "out";
  std::unordered_map<std::string, std::string> answers;
  for (const auto& rec : dataset::load_dataset(opts.dataset_path))
    answers[llm::cache_key(opts.model, prompting::render_prompt(rec).text)] = "maybe";
  opts.backend = std::make_shared<llm::ReplayBackend>(answers);
  std::ostringstream err;
  ASSERT_EQ(cmd_zeroshot(opts, err), 0) << err.str();
  const auto preds = load_predictions(opts.out_dir / "predictions.jsonl");
  EXPECT_EQ(preds.size(), 5u);
  for (const auto& p : preds) EXPECT_EQ(p.verdict, "UNPARSEABLE");
  EXPECT_NE(slurp(opts.out_dir / "report.md").find("| LFQA | ID | 5 | 0.00 | 0.00 | 100.00 | 100.00 |"),
            std::string::npos);
}

TEST(ZeroShot, NoEndpointNoReplayFails) {
  TempDir dir;
  ZeroShotOptions opts;
  opts.dataset_path = data_path("fixture_20.jsonl");
  opts.out_dir = dir / "out";
  std::ostringstream err;
  EXPECT_EQ(cmd_zeroshot(opts, err), 1);
  EXPECT_NE(err.str().find("endpoint"), std::string::npos);
}

// 84 positives then 84 negatives; predictions give tp=11, fn=73, fp=15, tn=69.
struct BalancedFixture {
  std::filesystem::path dataset;
  std::filesystem::path predictions;
};

BalancedFixture write_balanced(const TempDir& dir) {
  std::string data;
  std::string preds;
  for (int i = 0; i < 168; ++i) {
    const bool gold_pos = i < 84;
    const bool pred_pos = gold_pos ? i < 11 : i < 84 + 15;
    dataset::AttributionRecord rec;
    rec.id = "b-" + std::to_string(i);
    rec.question = "q";
    rec.response = "r";
    rec.claim = "c";
    rec.references = {"ref"};
    rec.label = gold_pos ? Label::Attributable : Label::NotAttributable;
    rec.subset = "LFQA";
    rec.split = Split::ID;
    data += dataset::to_json_line(rec) + "\n";
    PredictionLine line{rec.id, pred_pos ? "YES" : "NO", pred_pos ? "YES" : "NO",
                        pred_pos ? Label::Attributable : Label::NotAttributable, true, 0, {}};
    preds += format_prediction(line) + "\n";
  }
  BalancedFixture f{dir / "balanced.jsonl", dir / "predictions.jsonl"};
  spit(f.dataset, data);
  spit(f.predictions, preds);
  return f;
}

TEST(Metrics, ReproducesTableRow) {
  TempDir dir;
  const auto f = write_balanced(dir);
  const auto r = run_cli({"metrics", "--predictions", f.predictions.string(), "--dataset",
                          f.dataset.string(), "--out", (dir / "out").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(slurp(dir / "out" / "report.md").find("| LFQA | ID | 168 | 20.00 | 17.86 | 86.90 | 0.00 |"),
            std::string::npos)
      << slurp(dir / "out" / "report.md");
}

TEST(Metrics, ReportMatchesZeroShotAndIsIdempotent) {
  TempDir dir;
  const auto replay = write_replay(dir);
  const auto data = data_path("fixture_20.jsonl").string();
  ASSERT_EQ(run_cli({"zeroshot", "--dataset", data, "--replay", replay.string(), "--out",
                     (dir / "zs").string()}).code, 0);
  const auto preds = (dir / "zs" / "predictions.jsonl").string();
  for (const char* out : {"m1", "m2"})
    ASSERT_EQ(run_cli({"metrics", "--predictions", preds, "--dataset", data, "--out", (dir / out).string()}).code, 0);
  EXPECT_EQ(slurp(dir / "m1" / "report.md"), slurp(dir / "m2" / "report.md"));
  EXPECT_EQ(slurp(dir / "m1" / "report.md"), slurp(dir / "zs" / "report.md"));
}

TEST(Metrics, RejectsEmptyUnknownAndDuplicatePredictions) {
  TempDir dir;
  const auto f = write_balanced(dir);
  const auto out = (dir / "out").string();

  spit(dir / "empty.jsonl", "");
  auto r = run_cli({"metrics", "--predictions", (dir / "empty.jsonl").string(), "--dataset",
                    f.dataset.string(), "--out", out});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("empty"), std::string::npos);

  PredictionLine stray{"ghost", "YES", "YES", Label::Attributable, true, 0, {}};
  spit(dir / "unknown.jsonl", slurp(f.predictions) + format_prediction(stray) + "\n");
  r = run_cli({"metrics", "--predictions", (dir / "unknown.jsonl").string(), "--dataset",
               f.dataset.string(), "--out", out});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("ghost"), std::string::npos);

  const auto text = slurp(f.predictions);
  spit(dir / "dup.jsonl", text + text.substr(0, text.find('\n') + 1));
  r = run_cli({"metrics", "--predictions", (dir / "dup.jsonl").string(), "--dataset",
               f.dataset.string(), "--out", out});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("duplicate"), std::string::npos);
}

TEST(Probe, TwelveLayerSweepIsDeterministic) {
  TempDir dir;
  const auto synth = testing::synthetic_layers(12, 6, 5);
  probe::write_feature_file(dir / "features.jsonl", synth.manifest, testing::flatten(synth.by_layer));
  std::string first;
  for (const char* out : {"p1", "p2"}) {
    const auto r = run_cli({"probe", "--features", (dir / "features.jsonl").string(), "--epochs", "200",
                            "--out", (dir / out).string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto report = slurp(dir / out / "report.md");
    EXPECT_EQ(count_lines(report, "| layer "), 12u);
    EXPECT_NE(report.find("| layer 12 | ID | 34 | 66.67 | 100.00 | 0.00 | 0.00 | degenerate |"),
              std::string::npos)
        << report;
    EXPECT_NE(report.find("- protocol: holdout80_20"), std::string::npos);
    if (first.empty()) first = report;
    else EXPECT_EQ(report, first);
  }
}

TEST(Probe, LayerSelectionAndValidation) {
  TempDir dir;
  const auto synth = testing::synthetic_layers(4, 3, 5, 20);
  const auto path = (dir / "f.jsonl").string();
  probe::write_feature_file(path, synth.manifest, testing::flatten(synth.by_layer));

  auto r = run_cli({"probe", "--features", path, "--layer", "2,4", "--protocol", "train_equals_eval",
                    "--format", "csv", "--out", (dir / "o").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = report::parse_csv(slurp(dir / "o" / "report.csv"));
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].subset, "layer 2");
  EXPECT_EQ(rows[1].support, 40u);

  r = run_cli({"probe", "--features", path, "--layer", "9", "--out", (dir / "o").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("layer 9"), std::string::npos);

  r = run_cli({"probe", "--features", path, "--protocol", "kfold", "--out", (dir / "o").string()});
  EXPECT_EQ(r.code, 1);
}

TEST(Probe, InconsistentDimensionNamesLine) {
  TempDir dir;
  const auto synth = testing::synthetic_layers(2, 3, 5, 4);
  auto text = probe::format_feature_file(synth.manifest, testing::flatten(synth.by_layer));
  // Break the third line (second vector).
  std::size_t pos = 0;
  for (int i = 0; i < 2; ++i) pos = text.find('\n', pos) + 1;
  const auto values = text.find("\"values\":[", pos) + 10;
  text.insert(values, "1.5,");
  spit(dir / "bad.jsonl", text);
  const auto r = run_cli({"probe", "--features", (dir / "bad.jsonl").string(), "--out", (dir / "o").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("bad.jsonl:3"), std::string::npos) << r.err;
}

TEST(Config, Precedence) {
  const nlohmann::json file{{"model", "from-file"}, {"endpoint", "http://file"}, {"temperature", 0.3},
                            {"max_retries", 5}};
  std::map<std::string, std::string> env_vars{{"ATTRIBEVAL_MODEL", "from-env"}};
  const EnvLookup env = [&](const std::string& name) -> std::optional<std::string> {
    const auto it = env_vars.find(name);
    if (it == env_vars.end()) return std::nullopt;
    return it->second;
  };

  ModelFlags flags;
  auto cfg = resolve_model_config(flags, env, file);
  EXPECT_EQ(cfg.model_name, "from-env");
  EXPECT_EQ(cfg.endpoint_url, "http://file");
  EXPECT_DOUBLE_EQ(cfg.temperature, 0.3);
  EXPECT_EQ(cfg.max_retries, 5);

  flags.model = "from-flag";
  flags.temperature = 0.0;
  cfg = resolve_model_config(flags, env, file);
  EXPECT_EQ(cfg.model_name, "from-flag");
  EXPECT_DOUBLE_EQ(cfg.temperature, 0.0);

  cfg = resolve_model_config({}, [](const std::string&) { return std::nullopt; }, nlohmann::json{});
  EXPECT_EQ(cfg.model_name, "flan-ul2");
  EXPECT_EQ(cfg.max_output_tokens, 8);

  ModelFlags bad;
  bad.max_output_tokens = 0;
  EXPECT_THROW(resolve_model_config(bad, env, file), Error);
}

TEST(Run, HelpAndParseErrors) {
  EXPECT_EQ(run_cli({"--help"}).code, 0);
  EXPECT_EQ(run_cli({"zeroshot"}).code, 2);
  EXPECT_EQ(run_cli({"frobnicate"}).code, 2);
  EXPECT_EQ(run_cli({}).code, 2);
}

TEST(Run, ConfigFileSuppliesModel) {
  TempDir dir;
  spit(dir / "cfg.json", R"({"model":"cfg-model"})");
  const auto r = run_cli({"--config", (dir / "cfg.json").string(), "digests", "--dataset",
                          data_path("fixture_20.jsonl").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  llm::ModelConfig cfg;
  cfg.model_name = "cfg-model";
  const auto first = nlohmann::json::parse(r.out.substr(0, r.out.find('\n')));
  const auto rec = dataset::load_dataset(data_path("fixture_20.jsonl")).front();
  EXPECT_EQ(first["digest"], llm::cache_key(cfg, prompting::render_prompt(rec).text));
}

TEST(Render, EmitsExtractorPrompts) {
  const auto r = run_cli({"render", "--dataset", data_path("de_beers.jsonl").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto obj = nlohmann::json::parse(r.out.substr(0, r.out.find('\n')));
  EXPECT_EQ(obj["id"], "debeers-0001");
  EXPECT_EQ(obj["template_version"], "entailment-v1");
  EXPECT_EQ(obj["label"], "N");
  EXPECT_EQ(obj["text"].get<std::string>(), slurp(data_path("golden/de_beers_prompt.txt")));
}

TEST(Balance, SubcommandIsSeeded) {
  const auto a = run_cli({"balance", "--dataset", data_path("fixture_20.jsonl").string(), "--per-class", "3",
                          "--seed", "4"});
  const auto b = run_cli({"balance", "--dataset", data_path("fixture_20.jsonl").string(), "--per-class", "3",
                          "--seed", "4"});
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(count_lines(a.out, "{"), 6u);
  EXPECT_EQ(run_cli({"balance", "--dataset", data_path("fixture_20.jsonl").string(), "--per-class", "50"}).code,
            1);
}

TEST(ReplayFixture, CoversCurrentPromptDigests) {
  const auto replay = llm::ReplayBackend::from_file(data_path("fixture_20.replay.jsonl"));
  const auto r = run_cli({"digests", "--dataset", data_path("fixture_20.jsonl").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream in(r.out);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line); ++n) {
    const auto digest = nlohmann::json::parse(line)["digest"].get<std::string>();
    EXPECT_NO_THROW(replay->fetch(llm::ModelConfig{}, "", digest)) << line;
  }
  EXPECT_EQ(n, 20u);
}

}  // namespace
}  // namespace attribeval::cli
