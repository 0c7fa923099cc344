#pragma once

// Chat-completion / embedding client with structured-output enforcement,
// retries with backoff, a content-addressed response cache, and a scripted
// deterministic mock backend.

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "psychoforge/jsonl.hpp"
#include "psychoforge/metrics.hpp"

namespace psychoforge::provider {

// ---------------------------------------------------------------------------
// Schema subset validator

/// Supported keywords: type, properties, required, additionalProperties,
/// enum, const, minimum, maximum, minLength, items, minItems, maxItems.
/// Returns human-readable violations; empty means the document conforms.
[[nodiscard]] std::vector<std::string> schema_violations(const Json& schema, const Json& doc);
[[nodiscard]] inline bool conforms(const Json& schema, const Json& doc) {
  return schema_violations(schema, doc).empty();
}

// ---------------------------------------------------------------------------
// Configuration and requests

struct Sampling {
  double temperature = 1.0;
  double top_p = 1.0;
  double presence_penalty = 0.0;
  double frequency_penalty = 0.0;

  [[nodiscard]] Json to_json() const;
  [[nodiscard]] static Sampling from_json(const Json& j, const Sampling& defaults);
  [[nodiscard]] static Sampling from_json(const Json& j) { return from_json(j, Sampling{}); }
};

struct ProviderConfig {
  std::string profile = "default";
  std::string base_url;
  std::string model_name = "mock-model";
  std::string embedding_model;
  std::string api_key_ref;  // name of the environment variable holding the key
  double timeout_s = 120.0;
  int max_retries = 3;
  Sampling sampling;
  int max_in_flight = 4;
  bool cache_enabled = true;
  std::filesystem::path cache_dir;

  void validate() const;
  [[nodiscard]] static ProviderConfig from_json(const Json& j);
  /// Secrets are never serialized; only the variable name is.
  [[nodiscard]] Json to_json() const;
};

struct StructuredRequest {
  std::string system_text;
  std::string user_text;
  Json output_schema;
  std::string schema_name = "response";
  /// Stable identity of the logical request; used by the mock script.
  std::string request_tag;
  /// Distinguishes deliberate re-samples of the same prompt (regeneration,
  /// refinement iterations). Part of the cache key.
  int sample_index = 0;
  /// Per-request sampling override; falls back to the profile's.
  std::optional<Sampling> sampling;
  /// Structured view of the inputs for offline mock generators. Never sent on
  /// the wire and not part of the cache key.
  Json context;
};

struct Usage {
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;
};

struct ProviderResult {
  Json payload;
  int attempts = 0;  // network attempts made; 0 on a cache hit
  bool cached = false;
  std::optional<Usage> usage;
};

// ---------------------------------------------------------------------------
// Backends

struct RawCompletion {
  enum class Status { Ok, Transport, RateLimited, ServerError, Unauthorized, ClientError };
  Status status = Status::Ok;
  int http_status = 200;
  std::string content;  // model message text, expected to be JSON
  std::optional<Usage> usage;
  std::string error;
};

class Backend {
 public:
  virtual ~Backend() = default;
  /// One raw attempt; must be thread-safe.
  virtual RawCompletion complete(const StructuredRequest& req, const ProviderConfig& cfg, const Sampling& s) = 0;
  virtual std::vector<std::vector<double>> embed(const std::vector<std::string>& texts, const ProviderConfig& cfg) = 0;
  [[nodiscard]] virtual std::string identity() const = 0;
};

/// OpenAI-compatible HTTP API: POST {base_url}/chat/completions and
/// {base_url}/embeddings with bearer auth read from cfg.api_key_ref.
class HttpBackend final : public Backend {
 public:
  RawCompletion complete(const StructuredRequest& req, const ProviderConfig& cfg, const Sampling& s) override;
  std::vector<std::vector<double>> embed(const std::vector<std::string>& texts, const ProviderConfig& cfg) override;
  [[nodiscard]] std::string identity() const override { return "openai-compatible-http"; }

  /// Request body sent to /chat/completions; exposed for tests.
  [[nodiscard]] static Json chat_body(const StructuredRequest& req, const ProviderConfig& cfg, const Sampling& s);
};

/// Scripted offline backend. Script format:
///   {"rules": [{"match": "<glob over request_tag>",
///               "responses": [{"payload": {...}} | {"error": 429} | {"raw": "..."}],
///               "exhausted": "repeat_last" | "cycle" | "error"}
///            | {"match": "...", "generator": "<name>", "params": {...}}],
///    "embedding": {"dimension": 32}}
/// Rules are tried in order; an unmatched tag raises UnscriptedRequest.
/// Scripted responses advance a per-tag counter, so retries and re-samples
/// of one logical request walk the list in order.
class MockBackend final : public Backend {
 public:
  explicit MockBackend(Json script);
  [[nodiscard]] static std::shared_ptr<MockBackend> from_file(const std::filesystem::path& path);

  RawCompletion complete(const StructuredRequest& req, const ProviderConfig& cfg, const Sampling& s) override;
  std::vector<std::vector<double>> embed(const std::vector<std::string>& texts, const ProviderConfig& cfg) override;
  [[nodiscard]] std::string identity() const override;

  [[nodiscard]] std::size_t calls_for(const std::string& tag) const;

 private:
  Json script_;
  std::string digest_;
  std::size_t dimension_ = 32;
  mutable std::mutex mu_;
  std::unordered_map<std::string, std::size_t> counters_;
};

/// Deterministic content generator used by mock rules; exposed for tests.
[[nodiscard]] Json run_generator(const std::string& name, const Json& params, const StructuredRequest& req);

/// Read precomputed vectors (one JSON array, or {"embedding": [...]}, per
/// line). Throws CountMismatch when the count differs from `expected`.
[[nodiscard]] metrics::EmbeddingSet load_embeddings(const std::filesystem::path& path, std::size_t expected);

// ---------------------------------------------------------------------------
// Cache

/// Content-addressed JSON entries under `dir/<key[0:2]>/<key>.json`, fronted
/// by an in-memory map. Concurrent readers, single writer.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir = {});

  [[nodiscard]] std::optional<Json> get(const std::string& key) const;
  void put(const std::string& key, const Json& entry);
  [[nodiscard]] std::size_t size() const;

 private:
  std::filesystem::path dir_;
  mutable std::shared_mutex mu_;
  mutable std::unordered_map<std::string, Json> mem_;
};

// ---------------------------------------------------------------------------
// Client

/// Backoff before retry number `retry` (1-based): min(30s, 1s * 2^(retry-1))
/// scaled by a jitter factor in [0.8, 1.2] derived from `key`.
[[nodiscard]] std::chrono::milliseconds backoff_delay(int retry, const std::string& key);

class Provider {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  Provider(ProviderConfig cfg, std::shared_ptr<Backend> backend, std::shared_ptr<ResponseCache> cache = nullptr);

  /// At most max_retries + 1 attempts. Transport, 429 and 5xx failures back
  /// off; schema-invalid completions retry immediately. Both count as attempts.
  [[nodiscard]] ProviderResult complete_structured(const StructuredRequest& req);
  [[nodiscard]] metrics::EmbeddingSet embed(const std::vector<std::string>& texts);

  [[nodiscard]] std::string cache_key(const StructuredRequest& req) const;
  [[nodiscard]] Sampling effective_sampling(const StructuredRequest& req) const;

  [[nodiscard]] const ProviderConfig& config() const noexcept { return cfg_; }
  [[nodiscard]] const Backend& backend() const noexcept { return *backend_; }
  [[nodiscard]] std::size_t network_calls() const noexcept { return network_calls_.load(); }
  void set_sleeper(Sleeper s) { sleeper_ = std::move(s); }

 private:
  class Slot;
  void acquire();
  void release();

  ProviderConfig cfg_;
  std::shared_ptr<Backend> backend_;
  std::shared_ptr<ResponseCache> cache_;
  Sleeper sleeper_;
  std::atomic<std::size_t> network_calls_{0};
  std::mutex slot_mu_;
  std::condition_variable slot_cv_;
  int in_flight_ = 0;
};

}  // namespace psychoforge::provider
