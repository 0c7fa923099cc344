#include <algorithm>
#include <cstdlib>

#include <httplib.h>

#include "psychoforge/error.hpp"
#include "psychoforge/provider.hpp"

namespace psychoforge::provider {
namespace {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path without trailing slash, e.g. "/v1"
};

Endpoint split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) fail(ErrorCode::Config, "base_url '" + url + "' lacks a scheme");
  const auto path_begin = url.find('/', scheme_end + 3);
  Endpoint e;
  e.origin = url.substr(0, path_begin);
  e.prefix = path_begin == std::string::npos ? std::string() : url.substr(path_begin);
  while (!e.prefix.empty() && e.prefix.back() == '/') e.prefix.pop_back();
  return e;
}

std::string api_key(const ProviderConfig& cfg) {
  if (cfg.api_key_ref.empty()) return {};
  const char* v = std::getenv(cfg.api_key_ref.c_str());
  if (v == nullptr) fail(ErrorCode::AuthMissing, "environment variable " + cfg.api_key_ref + " is not set");
  return v;
}

httplib::Client make_client(const Endpoint& e, const ProviderConfig& cfg) {
  httplib::Client cli(e.origin);
  const auto secs = static_cast<time_t>(cfg.timeout_s);
  cli.set_connection_timeout(secs);
  cli.set_read_timeout(secs);
  cli.set_write_timeout(secs);
  if (auto key = api_key(cfg); !key.empty()) cli.set_bearer_token_auth(key);
  return cli;
}

RawCompletion::Status classify(int status) {
  if (status == 429) return RawCompletion::Status::RateLimited;
  if (status == 401 || status == 403) return RawCompletion::Status::Unauthorized;
  if (status >= 500) return RawCompletion::Status::ServerError;
  if (status >= 400) return RawCompletion::Status::ClientError;
  return RawCompletion::Status::Ok;
}

}  // namespace

Json HttpBackend::chat_body(const StructuredRequest& req, const ProviderConfig& cfg, const Sampling& s) {
  Json body;
  body["model"] = cfg.model_name;
  body["messages"] = Json::array({Json{{"role", "system"}, {"content", req.system_text}},
                                  Json{{"role", "user"}, {"content", req.user_text}}});
  body["temperature"] = s.temperature;
  body["top_p"] = s.top_p;
  body["presence_penalty"] = s.presence_penalty;
  body["frequency_penalty"] = s.frequency_penalty;
  body["response_format"] = Json{{"type", "json_schema"},
                                 {"json_schema", Json{{"name", req.schema_name},
                                                      {"strict", true},
                                                      {"schema", req.output_schema}}}};
  return body;
}

RawCompletion HttpBackend::complete(const StructuredRequest& req, const ProviderConfig& cfg, const Sampling& s) {
  const Endpoint e = split_url(cfg.base_url);
  auto cli = make_client(e, cfg);
  auto res = cli.Post(e.prefix + "/chat/completions", chat_body(req, cfg, s).dump(), "application/json");
  RawCompletion out;
  if (!res) {
    out.status = RawCompletion::Status::Transport;
    out.http_status = 0;
    out.error = httplib::to_string(res.error());
    return out;
  }
  out.http_status = res->status;
  out.status = classify(res->status);
  if (out.status != RawCompletion::Status::Ok) {
    out.error = res->body.substr(0, 512);
    return out;
  }
  try {
    const Json j = Json::parse(res->body);
    out.content = j.at("choices").at(0).at("message").at("content").get<std::string>();
    if (j.contains("usage") && j["usage"].is_object()) {
      Usage u;
      u.prompt_tokens = j["usage"].value("prompt_tokens", 0);
      u.completion_tokens = j["usage"].value("completion_tokens", 0);
      out.usage = u;
    }
  } catch (const std::exception& ex) {
    // A malformed envelope is treated like an unparseable completion.
    out.content.clear();
    out.error = std::string("malformed response envelope: ") + ex.what();
  }
  return out;
}

std::vector<std::vector<double>> HttpBackend::embed(const std::vector<std::string>& texts, const ProviderConfig& cfg) {
  const Endpoint e = split_url(cfg.base_url);
  auto cli = make_client(e, cfg);
  Json body;
  body["model"] = cfg.embedding_model.empty() ? cfg.model_name : cfg.embedding_model;
  body["input"] = texts;
  auto res = cli.Post(e.prefix + "/embeddings", body.dump(), "application/json");
  if (!res) fail(ErrorCode::Transport, "embeddings request failed: " + httplib::to_string(res.error()));
  if (res->status != 200) {
    if (classify(res->status) == RawCompletion::Status::Unauthorized) {
      fail(ErrorCode::AuthMissing, "embeddings request rejected with HTTP " + std::to_string(res->status));
    }
    fail(ErrorCode::Transport, "embeddings request failed with HTTP " + std::to_string(res->status));
  }
  std::vector<std::vector<double>> out;
  try {
    const Json j = Json::parse(res->body);
    std::vector<std::pair<std::int64_t, std::vector<double>>> rows;
    for (const auto& d : j.at("data")) {
      rows.emplace_back(d.value("index", static_cast<std::int64_t>(rows.size())), d.at("embedding").get<std::vector<double>>());
    }
    std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (auto& r : rows) out.push_back(std::move(r.second));
  } catch (const std::exception& ex) {
    fail(ErrorCode::Parse, std::string("malformed embeddings response: ") + ex.what());
  }
  return out;
}

}  // namespace psychoforge::provider
