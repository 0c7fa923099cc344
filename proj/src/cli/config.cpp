#include <cstdlib>

#include "psychoforge/cli.hpp"
#include "psychoforge/hashing.hpp"
#include "psychoforge/text.hpp"

namespace psychoforge::cli {
namespace {

std::string expand(const std::string& s) {
  std::string out;
  std::size_t pos = 0;
  while (true) {
    const auto open = s.find("${", pos);
    if (open == std::string::npos) break;
    const auto close = s.find('}', open + 2);
    if (close == std::string::npos) break;
    const std::string name = s.substr(open + 2, close - open - 2);
    const char* v = std::getenv(name.c_str());
    if (v == nullptr) fail(ErrorCode::Config, "config references unset environment variable " + name);
    out += s.substr(pos, open - pos);
    out += v;
    pos = close + 1;
  }
  out += s.substr(pos);
  return out;
}

}  // namespace

int exit_code_for(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::Config:
    case ErrorCode::AuthMissing:
    case ErrorCode::Io:
    case ErrorCode::UnknownField:
      return kExitConfig;
    case ErrorCode::ExhaustedRetries:
    case ErrorCode::Transport:
    case ErrorCode::UnscriptedRequest:
      return kExitProvider;
    case ErrorCode::SchemaInvalid:
    case ErrorCode::Parse:
      return kExitSchema;
    default:
      return kExitFailure;
  }
}

Json interpolate_env(const Json& doc) {
  if (doc.is_string()) return expand(doc.get<std::string>());
  if (doc.is_object()) {
    Json out = Json::object();
    for (const auto& [k, v] : doc.items()) out[k] = interpolate_env(v);
    return out;
  }
  if (doc.is_array()) {
    Json out = Json::array();
    for (const auto& v : doc) out.push_back(interpolate_env(v));
    return out;
  }
  return doc;
}

Config Config::load(const std::optional<std::filesystem::path>& path) {
  Config c;
  if (!path) return c;
  if (!std::filesystem::exists(*path)) fail(ErrorCode::Config, "--config: file not found: " + path->string());
  try {
    c.doc = Json::parse(text::read_file(*path));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Config, "--config: " + path->string() + ": " + e.what());
  }
  if (!c.doc.is_object()) fail(ErrorCode::Config, "--config: top level must be an object");
  c.digest = sha256_hex(c.doc.dump());
  c.doc = interpolate_env(c.doc);
  c.base_dir = path->parent_path().empty() ? std::filesystem::path(".") : path->parent_path();
  return c;
}

Json Config::section(const std::string& name) const {
  if (!doc.contains(name)) return Json::object();
  if (!doc[name].is_object()) fail(ErrorCode::Config, "config section '" + name + "' must be an object");
  return doc[name];
}

std::filesystem::path Config::resolve(const std::filesystem::path& p) const {
  return p.is_absolute() ? p : base_dir / p;
}

std::string Config::hash() const { return digest.empty() ? sha256_hex(doc.dump()) : digest; }

}  // namespace psychoforge::cli
