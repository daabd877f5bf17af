#include "attribeval/llm_client.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <openssl/evp.h>
#include <spdlog/spdlog.h>

#include "text_util.hpp"

namespace attribeval::llm {

using json = nlohmann::json;

namespace {

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 digest failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0x0F]);
  }
  return out;
}

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

ParsedUrl parse_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos)
    throw Error("endpoint URL must start with http:// or https://: '" + url + "'");
  const auto scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https")
    throw Error("unsupported endpoint scheme '" + scheme + "'");
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

bool is_transient_status(int status) { return status == 408 || status == 429 || status >= 500; }

}  // namespace

void ModelConfig::validate() const {
  if (!(temperature >= 0)) throw Error("temperature must be >= 0");
  if (max_output_tokens < 1) throw Error("max_output_tokens must be >= 1");
  if (max_retries < 0) throw Error("max_retries must be >= 0");
  if (!(timeout_seconds > 0)) throw Error("timeout_seconds must be > 0");
}

json ModelConfig::snapshot() const {
  return json{{"model_name", model_name},
              {"endpoint_url", endpoint_url},
              {"temperature", temperature},
              {"max_output_tokens", max_output_tokens},
              {"timeout_seconds", timeout_seconds},
              {"max_retries", max_retries},
              {"api_key_env", api_key_env}};
}

std::string cache_key(const ModelConfig& config, std::string_view prompt) {
  // Keys of a json object serialize sorted, so this text is canonical.
  const json material{{"scheme", "attribeval-cache-v1"},
                      {"model_name", config.model_name},
                      {"temperature", config.temperature},
                      {"max_output_tokens", config.max_output_tokens},
                      {"prompt", prompt}};
  return sha256_hex(material.dump());
}

TransportError::TransportError(const std::string& what, int status, bool transient, int attempts)
    : Error(what), status_(status), transient_(transient), attempts_(attempts) {}

ReplayMissError::ReplayMissError(const std::string& digest)
    : Error("replay fixture has no entry for digest " + digest) {}

json HttpBackend::build_request(const ModelConfig& config, std::string_view prompt) {
  return json{{"model", config.model_name},
              {"messages", json::array({json{{"role", "user"}, {"content", prompt}}})},
              {"temperature", config.temperature},
              {"max_tokens", config.max_output_tokens},
              {"stream", false}};
}

std::string HttpBackend::parse_response(std::string_view body) {
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::parse_error& e) {
    throw ProtocolError(std::string("endpoint returned invalid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("choices") || !doc["choices"].is_array() ||
      doc["choices"].empty())
    throw ProtocolError("endpoint response has no choices");
  const auto& choice = doc["choices"][0];
  if (!choice.is_object() || !choice.contains("message") || !choice["message"].is_object())
    throw ProtocolError("endpoint response choice has no message");
  const auto& content = choice["message"].value("content", json());
  if (content.is_null()) return {};
  if (!content.is_string()) throw ProtocolError("endpoint message content is not a string");
  return content.get<std::string>();
}

BackendReply HttpBackend::fetch(const ModelConfig& config, std::string_view prompt,
                                std::string_view /*digest*/) {
  if (config.endpoint_url.empty()) throw Error("no endpoint URL configured");
  const auto url = parse_url(config.endpoint_url);

  httplib::Client client(url.origin);
  const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(
      std::chrono::duration<double>(config.timeout_seconds));
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);

  httplib::Headers headers;
  if (const char* key = std::getenv(config.api_key_env.c_str()); key != nullptr && *key != '\0')
    headers.emplace("Authorization", std::string("Bearer ") + key);

  const auto body = build_request(config, prompt).dump();
  auto res = client.Post(url.path, headers, body, "application/json");
  if (!res)
    throw TransportError("request to " + config.endpoint_url +
                             " failed: " + httplib::to_string(res.error()),
                         0, true);
  if (res->status != 200)
    throw TransportError("endpoint " + config.endpoint_url + " returned HTTP " +
                             std::to_string(res->status),
                         res->status, is_transient_status(res->status));
  return {parse_response(res->body), res->body};
}

ReplayBackend::ReplayBackend(std::unordered_map<std::string, std::string> answers)
    : answers_(std::move(answers)) {}

std::shared_ptr<ReplayBackend> ReplayBackend::from_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open replay fixture: " + path.string());
  std::unordered_map<std::string, std::string> answers;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw SchemaError(path.string(), line_no, "<line>", std::string("invalid JSON: ") + e.what());
    }
    if (!obj.is_object()) throw SchemaError(path.string(), line_no, "<line>", "expected an object");
    for (const char* key : {"digest", "raw_text"}) {
      if (!obj.contains(key) || !obj[key].is_string())
        throw SchemaError(path.string(), line_no, key, "missing or not a string");
    }
    answers[obj["digest"].get<std::string>()] = obj["raw_text"].get<std::string>();
  }
  return std::make_shared<ReplayBackend>(std::move(answers));
}

BackendReply ReplayBackend::fetch(const ModelConfig&, std::string_view, std::string_view digest) {
  const auto it = answers_.find(std::string(digest));
  if (it == answers_.end()) throw ReplayMissError(std::string(digest));
  return {it->second, {}};
}

DiskCache::DiskCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw IoError("cannot create cache directory " + dir_.string() + ": " + ec.message());
}

std::filesystem::path DiskCache::entry_path(std::string_view digest) const {
  return dir_ / (std::string(digest) + ".json");
}

std::optional<std::string> DiskCache::get(std::string_view digest) const {
  const auto path = entry_path(digest);
  if (!std::filesystem::exists(path)) return std::nullopt;
  try {
    const auto doc = json::parse(text::read_file(path));
    if (doc.value("digest", std::string()) != digest) {
      spdlog::warn("cache entry {} names a different digest; ignoring", path.string());
      return std::nullopt;
    }
    return doc.at("raw_text").get<std::string>();
  } catch (const json::exception& e) {
    spdlog::warn("unreadable cache entry {}: {}", path.string(), e.what());
    return std::nullopt;
  }
}

void DiskCache::put(std::string_view digest, std::string_view raw_text,
                    std::string_view response_body, const json& config_snapshot) const {
  const json doc{{"digest", digest},
                 {"raw_text", raw_text},
                 {"response_body", response_body},
                 {"config", config_snapshot}};
  text::write_file_atomic(entry_path(digest), doc.dump(2) + "\n");
}

std::chrono::milliseconds RetryPolicy::delay_before_retry(int retry_index) const {
  const double scaled =
      static_cast<double>(initial_backoff.count()) * std::pow(multiplier, retry_index);
  const double capped = std::min(scaled, static_cast<double>(max_backoff.count()));
  return std::chrono::milliseconds(static_cast<std::int64_t>(capped));
}

Client::Client(ModelConfig config, std::shared_ptr<Backend> backend,
               std::optional<std::filesystem::path> cache_dir, RetryPolicy retry)
    : config_(std::move(config)), backend_(std::move(backend)), retry_(retry) {
  config_.validate();
  if (!backend_) throw Error("client needs a backend");
  if (cache_dir) cache_.emplace(*cache_dir);
}

std::uint64_t Client::network_fetches() const {
  std::lock_guard lock(mu_);
  return network_fetches_;
}

Client::Outcome Client::fetch_with_retry(std::string_view prompt, const std::string& digest) {
  const int max_attempts = config_.max_retries + 1;
  for (int attempt = 1;; ++attempt) {
    {
      std::lock_guard lock(mu_);
      ++network_fetches_;
    }
    const auto start = std::chrono::steady_clock::now();
    try {
      auto reply = backend_->fetch(config_, prompt, digest);
      const std::chrono::duration<double, std::milli> elapsed =
          std::chrono::steady_clock::now() - start;
      if (cache_) cache_->put(digest, reply.raw_text, reply.response_body, config_.snapshot());
      return {std::move(reply.raw_text), false, elapsed.count(), attempt};
    } catch (const TransportError& e) {
      if (!e.transient() || attempt >= max_attempts)
        throw TransportError(e.what(), e.status(), e.transient(), attempt);
      const auto delay = retry_.delay_before_retry(attempt - 1);
      spdlog::debug("attempt {} failed ({}); retrying in {} ms", attempt, e.what(), delay.count());
      std::this_thread::sleep_for(delay);
    }
  }
}

Client::Outcome Client::resolve(std::string_view prompt, const std::string& digest) {
  if (backend_->is_replay()) return {backend_->fetch(config_, prompt, digest).raw_text, true, 0, 0};
  if (cache_) {
    if (auto hit = cache_->get(digest)) return {std::move(*hit), true, 0, 0};
  }
  return fetch_with_retry(prompt, digest);
}

CompletionResult Client::complete(std::string_view prompt, std::string_view record_id) {
  const auto digest = cache_key(config_, prompt);

  std::promise<Outcome> promise;
  std::shared_future<Outcome> shared;
  bool owner = false;
  {
    std::lock_guard lock(mu_);
    auto it = inflight_.find(digest);
    if (it == inflight_.end()) {
      shared = promise.get_future().share();
      inflight_.emplace(digest, shared);
      owner = true;
    } else {
      shared = it->second;
    }
  }

  if (owner) {
    try {
      promise.set_value(resolve(prompt, digest));
    } catch (...) {
      promise.set_exception(std::current_exception());
    }
  }

  Outcome outcome = shared.get();  // rethrows the owner's failure
  if (!owner) outcome = {outcome.raw_text, true, 0, 0};
  return {std::string(record_id), std::move(outcome.raw_text), outcome.cached, outcome.latency_ms,
          outcome.attempts};
}

std::vector<BatchEntry> Client::run_batch(std::span<const prompting::PromptBundle> prompts,
                                          int parallelism) {
  if (parallelism < 1) throw Error("parallelism must be >= 1");
  std::vector<BatchEntry> entries(prompts.size());
  const auto n = static_cast<std::int64_t>(prompts.size());

#pragma omp parallel for schedule(dynamic, 1) num_threads(parallelism)
  for (std::int64_t i = 0; i < n; ++i) {
    const auto& bundle = prompts[static_cast<std::size_t>(i)];
    auto& entry = entries[static_cast<std::size_t>(i)];
    entry.record_id = bundle.record_id;
    try {
      entry.result = complete(bundle.text, bundle.record_id);
    } catch (const std::exception& e) {
      entry.error = e.what();
    }
  }
  return entries;
}

}  // namespace attribeval::llm
