#pragma once

#include <atomic>
#include <filesystem>
#include <memory>
#include <string>
#include <unistd.h>

#include <gtest/gtest.h>

#include "psychoforge/error.hpp"
#include "psychoforge/provider.hpp"

#define EXPECT_ERROR_CODE(stmt, expected)                                              \
  do {                                                                                 \
    try {                                                                              \
      stmt;                                                                            \
      ADD_FAILURE() << "expected " << psychoforge::to_string(expected) << " from " #stmt; \
    } catch (const psychoforge::Error& e_) {                                           \
      EXPECT_EQ(e_.code(), expected) << e_.what();                                     \
    }                                                                                  \
  } while (0)

namespace testing_support {

inline std::filesystem::path data_path(const std::string& rel) {
  return std::filesystem::path(PSYCHOFORGE_DATA_DIR) / rel;
}

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("psychoforge-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  [[nodiscard]] const std::filesystem::path& path() const { return path_; }
  [[nodiscard]] std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  std::filesystem::path path_;
};

/// Provider over a scripted mock; no cache and no real sleeping by default.
inline std::unique_ptr<psychoforge::provider::Provider> mock_provider(psychoforge::Json script, int max_in_flight = 4,
                                                                      bool cache = false, int max_retries = 3) {
  psychoforge::provider::ProviderConfig cfg;
  cfg.max_in_flight = max_in_flight;
  cfg.cache_enabled = cache;
  cfg.max_retries = max_retries;
  auto p = std::make_unique<psychoforge::provider::Provider>(
      cfg, std::make_shared<psychoforge::provider::MockBackend>(std::move(script)));
  p->set_sleeper([](std::chrono::milliseconds) {});
  return p;
}

}  // namespace testing_support
