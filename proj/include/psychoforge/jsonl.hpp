#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace psychoforge {

/// Insertion-ordered JSON keeps serialized field order stable for golden files.
using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

namespace jsonl {

/// Parse one entity per non-empty line. Throws Error{Parse} naming the line.
[[nodiscard]] std::vector<Json> read(const std::filesystem::path& path);

/// Serialize entities one per line ('\n' terminated) and write atomically.
void write(const std::filesystem::path& path, const std::vector<Json>& entities);

[[nodiscard]] std::string dump_line(const Json& entity);

/// Every entity must carry the same schema_version; returns it.
int check_schema_version(const std::vector<Json>& entities, const std::filesystem::path& origin);

}  // namespace jsonl
}  // namespace psychoforge
