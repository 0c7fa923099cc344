#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace psychoforge {

[[nodiscard]] constexpr std::uint64_t fnv1a64(std::string_view data) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

[[nodiscard]] constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Keyed seed split: child = splitmix64(parent ^ fnv1a64(key)).
/// Stages and items derive their own streams so results do not depend on
/// scheduling or on how many siblings were drawn before them.
[[nodiscard]] constexpr std::uint64_t derive_seed(std::uint64_t parent, std::string_view key) noexcept {
  return splitmix64(parent ^ fnv1a64(key));
}

/// Lowercase hex SHA-256.
[[nodiscard]] std::string sha256_hex(std::string_view data);
[[nodiscard]] std::string sha256_file(const std::filesystem::path& path);

}  // namespace psychoforge
