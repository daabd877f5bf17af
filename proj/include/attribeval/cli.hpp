#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "attribeval/dataset.hpp"
#include "attribeval/llm_client.hpp"
#include "attribeval/metrics.hpp"
#include "attribeval/probe.hpp"
#include "attribeval/prompting.hpp"
#include "attribeval/report.hpp"

namespace attribeval::cli {

inline constexpr std::string_view kZeroShotTitle = "Zero-shot attribution";
inline constexpr std::string_view kProbeTitle = "Attention probe layer sweep";

inline constexpr std::string_view kPredictionsFile = "predictions.jsonl";
inline constexpr std::string_view kManifestFile = "manifest.json";
inline constexpr std::string_view kReportStem = "report";

/// One persisted prediction.
struct PredictionLine {
  std::string id;
  std::string raw_text;
  std::string verdict;  // YES, NO, UNPARSEABLE or ERROR
  Label predicted_label = Label::NotAttributable;
  bool cached = false;
  double latency_ms = 0;
  std::string error;  // only written when non-empty

  bool counts_as_unparsed() const { return verdict == "UNPARSEABLE" || verdict == "ERROR"; }
};

std::string format_prediction(const PredictionLine& line);
std::vector<PredictionLine> load_predictions(const std::filesystem::path& path);

/// Groups records by (subset, split) in order of first appearance and builds
/// one row per group. Records without a prediction are skipped.
std::vector<metrics::MetricsRow> score_by_subset(
    std::span<const dataset::AttributionRecord> records,
    const std::unordered_map<std::string, PredictionLine>& predictions);

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

/// Process environment lookup.
std::optional<std::string> getenv_lookup(const std::string& name);

/// Model settings as given on the command line; unset means "not given".
struct ModelFlags {
  std::optional<std::string> model;
  std::optional<std::string> endpoint;
  std::optional<std::string> api_key_env;
  std::optional<double> temperature;
  std::optional<int> max_output_tokens;
  std::optional<double> timeout_seconds;
  std::optional<int> max_retries;
};

/// Precedence: flag > environment (ATTRIBEVAL_MODEL, ATTRIBEVAL_ENDPOINT) >
/// config file keys (model, endpoint, api_key_env, temperature,
/// max_output_tokens, timeout_seconds, max_retries) > defaults.
llm::ModelConfig resolve_model_config(const ModelFlags& flags, const EnvLookup& env,
                                      const nlohmann::json& config_file);

struct ZeroShotOptions {
  std::filesystem::path dataset_path;
  std::optional<std::string> subset;
  std::optional<Split> split;
  llm::ModelConfig model;
  std::optional<std::filesystem::path> replay_path;
  std::optional<std::filesystem::path> cache_dir;
  int parallelism = 4;
  std::filesystem::path out_dir;
  report::Format format = report::Format::Markdown;
  std::uint64_t seed = 0;
  prompting::UnparsePolicy policy = prompting::UnparsePolicy::AsNegative;
  prompting::PromptOptions prompt;
  llm::RetryPolicy retry;
  /// Overrides the backend (tests); otherwise replay or HTTP per the options.
  std::shared_ptr<llm::Backend> backend;
};

struct ProbeOptions {
  std::filesystem::path features_path;
  std::vector<int> layers;  // empty: every manifest layer
  probe::SweepOptions sweep;
  std::filesystem::path out_dir;
  report::Format format = report::Format::Markdown;
};

struct MetricsOptions {
  std::filesystem::path predictions_path;
  std::filesystem::path dataset_path;
  std::filesystem::path out_dir;
  report::Format format = report::Format::Markdown;
  std::string model_name = "flan-ul2";
  std::uint64_t seed = 0;
};

// Each command returns a process exit code and writes diagnostics to `err`.
// Exit code 0 means the report file was written.
int cmd_zeroshot(const ZeroShotOptions& options, std::ostream& err);
int cmd_probe(const ProbeOptions& options, std::ostream& err);
int cmd_metrics(const MetricsOptions& options, std::ostream& err);

/// Full command-line entry point. `args` excludes the program name.
int run(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace attribeval::cli
