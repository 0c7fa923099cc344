#include <algorithm>

#include "psychoforge/cli.hpp"
#include "psychoforge/hashing.hpp"
#include "psychoforge/text.hpp"

namespace psychoforge::cli {

std::string dataset_kind(const std::string& rel_path) {
  const auto name = std::filesystem::path(rel_path).filename().string();
  if (name == "roster.jsonl") return "roster";
  if (name == "personas.jsonl") return "personas";
  if (name == "sjt_bank.jsonl") return "sjt_bank";
  if (name.rfind("sessions", 0) == 0) return "sessions";
  if (name.rfind("judgments", 0) == 0) return "judgments";
  if (name.rfind("failures", 0) == 0) return "failures";
  return "reports";
}

std::vector<FileDigest> digest_tree(const std::filesystem::path& out) {
  std::vector<FileDigest> files;
  if (!std::filesystem::exists(out)) return files;
  for (auto it = std::filesystem::recursive_directory_iterator(out); it != std::filesystem::recursive_directory_iterator();
       ++it) {
    const auto rel = std::filesystem::relative(it->path(), out).generic_string();
    if (it->is_directory()) {
      if (rel == kCacheDirName) it.disable_recursion_pending();
      continue;
    }
    if (!it->is_regular_file() || rel == kManifestName) continue;
    if (rel.find(".tmp") != std::string::npos) continue;
    FileDigest d;
    d.path = rel;
    d.sha256 = sha256_file(it->path());
    d.kind = dataset_kind(rel);
    if (it->path().extension() == ".jsonl") {
      const auto rows = jsonl::read(it->path());
      d.lines = rows.size();
      if (!rows.empty()) d.schema_version = jsonl::check_schema_version(rows, it->path());
    }
    files.push_back(std::move(d));
  }
  std::sort(files.begin(), files.end(), [](const FileDigest& a, const FileDigest& b) { return a.path < b.path; });
  return files;
}

void write_manifest(const std::filesystem::path& out, const std::string& stage, const Json& stage_record,
                    const Json& run_info) {
  const auto path = out / std::string(kManifestName);
  Json m = Json::object();
  if (std::filesystem::exists(path)) {
    try {
      m = Json::parse(text::read_file(path));
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::Parse, path.string() + ": " + e.what());
    }
  }
  m["schema_version"] = kSchemaVersion;
  for (const auto& [k, v] : run_info.items()) m[k] = v;
  if (!m.contains("stages")) m["stages"] = Json::object();
  m["stages"][stage] = stage_record;
  Json outputs = Json::array();
  for (const auto& d : digest_tree(out)) {
    Json row{{"path", d.path}, {"sha256", d.sha256}, {"kind", d.kind}};
    if (d.schema_version) row["schema_version"] = *d.schema_version;
    if (d.path.size() > 6 && d.path.substr(d.path.size() - 6) == ".jsonl") row["lines"] = d.lines;
    outputs.push_back(row);
  }
  m["outputs"] = outputs;
  text::write_file_atomic(path, m.dump(2) + "\n");
}

}  // namespace psychoforge::cli
