#include <fstream>

#include "psychoforge/error.hpp"
#include "psychoforge/provider.hpp"
#include "psychoforge/text.hpp"

namespace psychoforge::provider {
namespace {

std::filesystem::path entry_path(const std::filesystem::path& dir, const std::string& key) {
  return dir / key.substr(0, 2) / (key + ".json");
}

}  // namespace

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

std::optional<Json> ResponseCache::get(const std::string& key) const {
  {
    std::shared_lock lock(mu_);
    auto it = mem_.find(key);
    if (it != mem_.end()) return it->second;
  }
  if (dir_.empty()) return std::nullopt;
  const auto path = entry_path(dir_, key);
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) return std::nullopt;
  Json entry;
  try {
    entry = Json::parse(text::read_file(path));
  } catch (const std::exception&) {
    return std::nullopt;  // a torn or foreign file is a miss, never a payload
  }
  std::unique_lock lock(mu_);
  mem_.emplace(key, entry);
  return entry;
}

void ResponseCache::put(const std::string& key, const Json& entry) {
  std::unique_lock lock(mu_);
  if (!mem_.emplace(key, entry).second) return;
  if (dir_.empty()) return;
  const auto path = entry_path(dir_, key);
  std::filesystem::create_directories(path.parent_path());
  text::write_file_atomic(path, entry.dump());
}

std::size_t ResponseCache::size() const {
  std::shared_lock lock(mu_);
  return mem_.size();
}

}  // namespace psychoforge::provider
