#include "psychoforge/jsonl.hpp"

#include <fstream>

#include "psychoforge/error.hpp"
#include "psychoforge/text.hpp"

namespace psychoforge::jsonl {

std::vector<Json> read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open dataset: " + path.string());
  std::vector<Json> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    try {
      out.push_back(Json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::Parse, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::string dump_line(const Json& entity) {
  return entity.dump(-1, ' ', false, nlohmann::json::error_handler_t::strict);
}

void write(const std::filesystem::path& path, const std::vector<Json>& entities) {
  std::string buf;
  for (const auto& e : entities) {
    buf.append(dump_line(e));
    buf.push_back('\n');
  }
  text::write_file_atomic(path, buf);
}

int check_schema_version(const std::vector<Json>& entities, const std::filesystem::path& origin) {
  int version = kSchemaVersion;
  bool first = true;
  for (const auto& e : entities) {
    if (!e.is_object() || !e.contains("schema_version") || !e["schema_version"].is_number_integer()) {
      fail(ErrorCode::SchemaInvalid, origin.string() + ": entity without integer schema_version");
    }
    int v = e["schema_version"].get<int>();
    if (first) {
      version = v;
      first = false;
    } else if (v != version) {
      fail(ErrorCode::SchemaInvalid, origin.string() + ": mixed schema_version values");
    }
  }
  if (version != kSchemaVersion) {
    fail(ErrorCode::SchemaInvalid, origin.string() + ": unsupported schema_version " + std::to_string(version));
  }
  return version;
}

}  // namespace psychoforge::jsonl
