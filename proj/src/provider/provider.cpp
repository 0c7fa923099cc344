#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <thread>

#include "psychoforge/error.hpp"
#include "psychoforge/hashing.hpp"
#include "psychoforge/provider.hpp"
#include "psychoforge/rng.hpp"

namespace psychoforge::provider {
namespace {

constexpr double kBackoffBaseMs = 1000.0;
constexpr double kBackoffCapMs = 30000.0;
constexpr double kJitter = 0.2;

double number_or(const Json& j, const char* k, double fallback) {
  return j.contains(k) && j[k].is_number() ? j[k].get<double>() : fallback;
}

bool retryable_transport(RawCompletion::Status s) {
  return s == RawCompletion::Status::Transport || s == RawCompletion::Status::RateLimited ||
         s == RawCompletion::Status::ServerError;
}

}  // namespace

Json Sampling::to_json() const {
  Json j;
  j["temperature"] = temperature;
  j["top_p"] = top_p;
  j["presence_penalty"] = presence_penalty;
  j["frequency_penalty"] = frequency_penalty;
  return j;
}

Sampling Sampling::from_json(const Json& j, const Sampling& d) {
  Sampling s;
  s.temperature = number_or(j, "temperature", d.temperature);
  s.top_p = number_or(j, "top_p", d.top_p);
  s.presence_penalty = number_or(j, "presence_penalty", d.presence_penalty);
  s.frequency_penalty = number_or(j, "frequency_penalty", d.frequency_penalty);
  return s;
}

void ProviderConfig::validate() const {
  if (!(sampling.temperature >= 0.0)) fail(ErrorCode::Config, "provider '" + profile + "': temperature must be >= 0");
  if (!(sampling.top_p > 0.0 && sampling.top_p <= 1.0)) {
    fail(ErrorCode::Config, "provider '" + profile + "': top_p must be in (0, 1]");
  }
  if (max_in_flight < 1) fail(ErrorCode::Config, "provider '" + profile + "': max_in_flight must be >= 1");
  if (max_retries < 0) fail(ErrorCode::Config, "provider '" + profile + "': max_retries must be >= 0");
  if (!(timeout_s > 0.0)) fail(ErrorCode::Config, "provider '" + profile + "': timeout must be positive");
}

ProviderConfig ProviderConfig::from_json(const Json& j) {
  ProviderConfig c;
  if (!j.is_object()) fail(ErrorCode::Config, "provider profile must be an object");
  auto str = [&](const char* k, std::string& dst) {
    if (j.contains(k)) {
      if (!j[k].is_string()) fail(ErrorCode::Config, std::string("provider field '") + k + "' must be a string");
      dst = j[k].get<std::string>();
    }
  };
  str("profile", c.profile);
  str("base_url", c.base_url);
  str("model_name", c.model_name);
  str("embedding_model", c.embedding_model);
  str("api_key_ref", c.api_key_ref);
  c.timeout_s = number_or(j, "timeout", c.timeout_s);
  c.max_retries = static_cast<int>(number_or(j, "max_retries", c.max_retries));
  c.max_in_flight = static_cast<int>(number_or(j, "max_in_flight", c.max_in_flight));
  if (j.contains("sampling")) c.sampling = Sampling::from_json(j["sampling"]);
  if (j.contains("cache")) c.cache_enabled = j["cache"].get<bool>();
  if (j.contains("cache_dir")) c.cache_dir = j["cache_dir"].get<std::string>();
  c.validate();
  return c;
}

Json ProviderConfig::to_json() const {
  Json j;
  j["profile"] = profile;
  j["base_url"] = base_url;
  j["model_name"] = model_name;
  j["embedding_model"] = embedding_model;
  j["api_key_ref"] = api_key_ref;
  j["timeout"] = timeout_s;
  j["max_retries"] = max_retries;
  j["sampling"] = sampling.to_json();
  j["cache"] = cache_enabled;
  return j;
}

std::chrono::milliseconds backoff_delay(int retry, const std::string& key) {
  const double base = std::min(kBackoffCapMs, kBackoffBaseMs * std::pow(2.0, std::max(0, retry - 1)));
  Rng rng(derive_seed(fnv1a64(key), "backoff:" + std::to_string(retry)));
  const double factor = 1.0 - kJitter + 2.0 * kJitter * rng.uniform01();
  return std::chrono::milliseconds(static_cast<std::int64_t>(std::llround(base * factor)));
}

class Provider::Slot {
 public:
  explicit Slot(Provider& p) : p_(p) { p_.acquire(); }
  ~Slot() { p_.release(); }
  Slot(const Slot&) = delete;
  Slot& operator=(const Slot&) = delete;

 private:
  Provider& p_;
};

Provider::Provider(ProviderConfig cfg, std::shared_ptr<Backend> backend, std::shared_ptr<ResponseCache> cache)
    : cfg_(std::move(cfg)), backend_(std::move(backend)), cache_(std::move(cache)) {
  cfg_.validate();
  if (!backend_) fail(ErrorCode::Config, "provider constructed without a backend");
  if (cfg_.cache_enabled && !cache_) cache_ = std::make_shared<ResponseCache>(cfg_.cache_dir);
  if (!cfg_.cache_enabled) cache_.reset();
  sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

void Provider::acquire() {
  std::unique_lock lock(slot_mu_);
  slot_cv_.wait(lock, [&] { return in_flight_ < cfg_.max_in_flight; });
  ++in_flight_;
}

void Provider::release() {
  {
    std::lock_guard lock(slot_mu_);
    --in_flight_;
  }
  slot_cv_.notify_one();
}

Sampling Provider::effective_sampling(const StructuredRequest& req) const {
  return req.sampling.value_or(cfg_.sampling);
}

std::string Provider::cache_key(const StructuredRequest& req) const {
  Json k;
  k["system"] = req.system_text;
  k["user"] = req.user_text;
  k["schema"] = req.output_schema;
  k["model"] = cfg_.model_name;
  k["sampling"] = effective_sampling(req).to_json();
  k["sample_index"] = req.sample_index;
  return sha256_hex(k.dump());
}

ProviderResult Provider::complete_structured(const StructuredRequest& req) {
  if (req.output_schema.is_null() || (req.output_schema.is_object() && req.output_schema.empty())) {
    fail(ErrorCode::InvalidArgument, "request '" + req.request_tag + "' has an empty output schema");
  }
  const std::string key = cache_key(req);
  if (cache_) {
    if (auto hit = cache_->get(key); hit && hit->contains("payload") && conforms(req.output_schema, (*hit)["payload"])) {
      ProviderResult r;
      r.payload = (*hit)["payload"];
      r.cached = true;
      return r;
    }
  }
  if (!cfg_.api_key_ref.empty() && std::getenv(cfg_.api_key_ref.c_str()) == nullptr) {
    fail(ErrorCode::AuthMissing, "environment variable " + cfg_.api_key_ref + " is not set");
  }

  const Sampling sampling = effective_sampling(req);
  const int max_attempts = cfg_.max_retries + 1;
  std::string last_error;
  bool last_schema = false;
  int transport_retries = 0;
  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    RawCompletion raw;
    {
      Slot slot(*this);
      ++network_calls_;
      raw = backend_->complete(req, cfg_, sampling);
    }
    if (raw.status == RawCompletion::Status::Unauthorized) {
      throw Error(ErrorCode::AuthMissing, "request '" + req.request_tag + "' rejected: " + raw.error, attempt);
    }
    if (raw.status == RawCompletion::Status::ClientError) {
      throw Error(ErrorCode::Transport,
                  "request '" + req.request_tag + "' failed with HTTP " + std::to_string(raw.http_status) + ": " + raw.error,
                  attempt);
    }
    if (retryable_transport(raw.status)) {
      last_error = "HTTP " + std::to_string(raw.http_status) + ": " + raw.error;
      last_schema = false;
      if (attempt < max_attempts) sleeper_(backoff_delay(++transport_retries, key));
      continue;
    }
    Json payload;
    try {
      payload = Json::parse(raw.content);
    } catch (const nlohmann::json::exception& e) {
      last_error = std::string("completion is not JSON: ") + e.what();
      last_schema = true;
      continue;
    }
    if (auto v = schema_violations(req.output_schema, payload); !v.empty()) {
      last_error = "completion violates schema: " + v.front();
      last_schema = true;
      continue;
    }
    if (cache_) {
      Json entry;
      entry["request_tag"] = req.request_tag;
      entry["payload"] = payload;
      cache_->put(key, entry);
    }
    ProviderResult r;
    r.payload = std::move(payload);
    r.attempts = attempt;
    r.usage = raw.usage;
    return r;
  }
  const std::string msg = "request '" + req.request_tag + "' failed after " + std::to_string(max_attempts) +
                          " attempts; last error: " + last_error;
  throw Error(last_schema ? ErrorCode::SchemaInvalid : ErrorCode::ExhaustedRetries, msg, max_attempts);
}

metrics::EmbeddingSet Provider::embed(const std::vector<std::string>& texts) {
  if (texts.empty()) fail(ErrorCode::InvalidArgument, "embed: no texts");
  if (!cfg_.api_key_ref.empty() && std::getenv(cfg_.api_key_ref.c_str()) == nullptr) {
    fail(ErrorCode::AuthMissing, "environment variable " + cfg_.api_key_ref + " is not set");
  }
  metrics::EmbeddingSet set;
  {
    Slot slot(*this);
    ++network_calls_;
    set.vectors = backend_->embed(texts, cfg_);
  }
  if (set.vectors.size() != texts.size()) {
    fail(ErrorCode::CountMismatch, "embed: " + std::to_string(set.vectors.size()) + " vectors for " +
                                       std::to_string(texts.size()) + " texts");
  }
  set.check();
  return set;
}

metrics::EmbeddingSet load_embeddings(const std::filesystem::path& path, std::size_t expected) {
  metrics::EmbeddingSet set;
  for (const auto& row : jsonl::read(path)) {
    const Json& v = row.is_object() && row.contains("embedding") ? row["embedding"] : row;
    if (!v.is_array()) fail(ErrorCode::Parse, path.string() + ": embedding row is not an array");
    set.vectors.push_back(v.get<std::vector<double>>());
  }
  if (set.vectors.size() != expected) {
    fail(ErrorCode::CountMismatch, path.string() + ": " + std::to_string(set.vectors.size()) +
                                       " vectors, expected " + std::to_string(expected));
  }
  set.check();
  return set;
}

}  // namespace psychoforge::provider
