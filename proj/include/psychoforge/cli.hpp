#pragma once

// Command orchestration behind the psychoforge executable: configuration,
// output layout, failure ledgers and run manifests.

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "psychoforge/error.hpp"
#include "psychoforge/jsonl.hpp"

namespace psychoforge::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitProvider = 3;
inline constexpr int kExitSchema = 4;

[[nodiscard]] int exit_code_for(ErrorCode code) noexcept;

/// Flags shared by every command plus the per-command ones. Unset flags fall
/// back to the config file, then to built-in defaults.
struct Options {
  std::optional<std::filesystem::path> config;
  std::optional<std::uint64_t> seed;
  std::filesystem::path out = "out";
  std::optional<std::string> provider_profile;
  std::optional<int> max_in_flight;
  std::optional<std::string> controls;
  std::optional<std::filesystem::path> mock_script;

  std::optional<std::size_t> n;
  std::optional<std::filesystem::path> roster;
  std::optional<std::filesystem::path> personas;
  std::optional<std::filesystem::path> bank;
  std::optional<std::filesystem::path> sessions;
  std::optional<std::filesystem::path> inventory;
  std::optional<std::filesystem::path> pop_stats;
  std::optional<std::filesystem::path> human_ratings;
  std::optional<std::string> instrument;  // hexaco | sjt | both
  std::optional<std::string> rubric;      // 1 | 2 | persona
  std::optional<std::string> mode;        // balanced | iid
  std::optional<int> debleed_max;
  std::vector<std::string> analyses;
  std::vector<std::string> slices;
};

/// Replaces "${NAME}" inside every string value with the environment
/// variable; an unset variable is a Config error.
[[nodiscard]] Json interpolate_env(const Json& doc);

struct Config {
  Json doc = Json::object();
  std::filesystem::path base_dir = ".";
  std::string digest;  // over the file before interpolation, so secrets never reach it

  /// JSON object with optional top-level "seed", "data_dir",
  /// "max_in_flight", "provider_profile", "providers" and one section per
  /// command. An absent path yields the empty config.
  [[nodiscard]] static Config load(const std::optional<std::filesystem::path>& path);
  [[nodiscard]] Json section(const std::string& name) const;
  /// Relative paths resolve against the config file directory.
  [[nodiscard]] std::filesystem::path resolve(const std::filesystem::path& p) const;
  [[nodiscard]] std::string hash() const;
};

struct FileDigest {
  std::string path;  // relative to the output directory, '/' separated
  std::string sha256;
  std::string kind;
  std::optional<int> schema_version;
  std::size_t lines = 0;
};

inline constexpr std::string_view kManifestName = "manifest.json";
inline constexpr std::string_view kCacheDirName = ".cache";

/// Every regular file under `out` except the manifest and the response
/// cache, sorted by path.
[[nodiscard]] std::vector<FileDigest> digest_tree(const std::filesystem::path& out);
[[nodiscard]] std::string dataset_kind(const std::string& rel_path);

/// Merges one stage record into manifest.json, refreshes the output digest
/// list and rewrites the manifest atomically.
void write_manifest(const std::filesystem::path& out, const std::string& stage, const Json& stage_record,
                    const Json& run_info);

inline constexpr std::array<std::string_view, 8> kCommands = {"roster", "judge",    "personas", "sjt",
                                                              "administer", "score", "analyze",  "report"};

/// Runs one command, reporting errors on `err`. Returns the process exit code.
[[nodiscard]] int run_command(const std::string& command, const Options& opts, std::ostream& err);

}  // namespace psychoforge::cli
