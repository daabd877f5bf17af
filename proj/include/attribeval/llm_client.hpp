#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <future>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "attribeval/prompting.hpp"
#include "attribeval/types.hpp"

namespace attribeval::llm {

inline constexpr std::string_view kDefaultApiKeyEnv = "ATTRIBEVAL_API_KEY";

struct ModelConfig {
  std::string model_name = "flan-ul2";
  /// Full chat-completions URL, e.g. http://localhost:8000/v1/chat/completions.
  std::string endpoint_url;
  double temperature = 0.0;
  int max_output_tokens = 8;
  double timeout_seconds = 60.0;
  int max_retries = 3;
  std::string api_key_env = std::string(kDefaultApiKeyEnv);

  /// Throws Error when temperature < 0, max_output_tokens < 1 or max_retries < 0.
  void validate() const;
  /// Everything except secrets, for cache entries and run manifests.
  nlohmann::json snapshot() const;
};

struct CompletionResult {
  std::string record_id;
  std::string raw_text;
  bool cached = false;
  /// Wall time of the network exchange; 0 when nothing went over the wire.
  double latency_ms = 0;
  /// Network attempts made; 0 for cache and replay hits.
  int attempt_count = 0;
};

/// SHA-256 (hex) over model_name, temperature, max_output_tokens and prompt.
std::string cache_key(const ModelConfig& config, std::string_view prompt);

/// Request failed at the transport level. `status` is the last HTTP status,
/// or 0 when no response arrived.
class TransportError : public Error {
 public:
  TransportError(const std::string& what, int status, bool transient, int attempts = 1);

  int status() const { return status_; }
  bool transient() const { return transient_; }
  int attempts() const { return attempts_; }

 private:
  int status_;
  bool transient_;
  int attempts_;
};

/// Endpoint answered, but not with a chat-completions payload.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

class ReplayMissError : public Error {
 public:
  explicit ReplayMissError(const std::string& digest);
};

struct BackendReply {
  std::string raw_text;
  std::string response_body;  // verbatim endpoint body, empty for replay
};

/// Source of completions. Implementations must be callable concurrently.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual BackendReply fetch(const ModelConfig& config, std::string_view prompt,
                             std::string_view digest) = 0;
  /// Replay answers count as cache hits and bypass the disk cache.
  virtual bool is_replay() const { return false; }
};

/// OpenAI-compatible chat completions with one user message.
class HttpBackend : public Backend {
 public:
  /// Reads the API key from the environment variable named in the config at
  /// each request; an unset variable sends no Authorization header.
  HttpBackend() = default;
  BackendReply fetch(const ModelConfig& config, std::string_view prompt,
                     std::string_view digest) override;

  static nlohmann::json build_request(const ModelConfig& config, std::string_view prompt);
  /// Extracts choices[0].message.content; throws ProtocolError otherwise.
  static std::string parse_response(std::string_view body);
};

/// Answers from a digest -> raw_text fixture. Line-delimited, one
/// {"digest": ..., "raw_text": ...} object per line.
class ReplayBackend : public Backend {
 public:
  explicit ReplayBackend(std::unordered_map<std::string, std::string> answers);
  static std::shared_ptr<ReplayBackend> from_file(const std::filesystem::path& path);

  BackendReply fetch(const ModelConfig& config, std::string_view prompt,
                     std::string_view digest) override;
  bool is_replay() const override { return true; }
  std::size_t size() const { return answers_.size(); }

 private:
  std::unordered_map<std::string, std::string> answers_;
};

/// One JSON file per digest under `dir`. Writes are atomic per entry.
class DiskCache {
 public:
  explicit DiskCache(std::filesystem::path dir);

  std::optional<std::string> get(std::string_view digest) const;
  void put(std::string_view digest, std::string_view raw_text, std::string_view response_body,
           const nlohmann::json& config_snapshot) const;
  std::filesystem::path entry_path(std::string_view digest) const;

 private:
  std::filesystem::path dir_;
};

struct RetryPolicy {
  std::chrono::milliseconds initial_backoff{500};
  double multiplier = 2.0;
  std::chrono::milliseconds max_backoff{8000};

  std::chrono::milliseconds delay_before_retry(int retry_index) const;
};

/// One batch slot: either a result or an error message.
struct BatchEntry {
  std::string record_id;
  std::optional<CompletionResult> result;
  std::string error;

  bool ok() const { return result.has_value(); }
};

/// Thread-safe completion client. Identical (config, prompt) pairs are
/// requested at most once per client; later callers share the outcome.
class Client {
 public:
  Client(ModelConfig config, std::shared_ptr<Backend> backend,
         std::optional<std::filesystem::path> cache_dir = std::nullopt, RetryPolicy retry = {});

  /// Throws TransportError once retries are exhausted, ProtocolError on a
  /// malformed endpoint payload, ReplayMissError under replay.
  CompletionResult complete(std::string_view prompt, std::string_view record_id = {});

  /// One entry per prompt, in input order. Per-prompt failures are captured
  /// in the entry. `parallelism` bounds the number of concurrent requests.
  std::vector<BatchEntry> run_batch(std::span<const prompting::PromptBundle> prompts,
                                    int parallelism);

  const ModelConfig& config() const { return config_; }
  /// Number of fetches that went to a non-replay backend.
  std::uint64_t network_fetches() const;

 private:
  struct Outcome {
    std::string raw_text;
    bool cached = false;
    double latency_ms = 0;
    int attempts = 0;
  };

  Outcome resolve(std::string_view prompt, const std::string& digest);
  Outcome fetch_with_retry(std::string_view prompt, const std::string& digest);

  ModelConfig config_;
  std::shared_ptr<Backend> backend_;
  std::optional<DiskCache> cache_;
  RetryPolicy retry_;

  mutable std::mutex mu_;
  std::unordered_map<std::string, std::shared_future<Outcome>> inflight_;
  std::uint64_t network_fetches_ = 0;
};

}  // namespace attribeval::llm
