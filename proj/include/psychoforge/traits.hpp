#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace psychoforge {

/// HEXACO domain. Declaration order is the canonical presentation order.
enum class Trait : std::uint8_t { H = 0, E, X, A, C, O };

inline constexpr std::size_t kTraitCount = 6;
inline constexpr std::array<Trait, kTraitCount> kTraits = {Trait::H, Trait::E, Trait::X,
                                                           Trait::A, Trait::C, Trait::O};

template <typename T>
using PerTrait = std::array<T, kTraitCount>;

[[nodiscard]] constexpr std::size_t index(Trait t) noexcept { return static_cast<std::size_t>(t); }

[[nodiscard]] std::string_view letter(Trait t) noexcept;
/// snake_case key used in payloads: "honesty_humility", "emotionality", ...
[[nodiscard]] std::string_view key(Trait t) noexcept;
/// Human-readable name: "Honesty-Humility", "Openness to Experience", ...
[[nodiscard]] std::string_view display_name(Trait t) noexcept;
/// Payload field holding this trait's option text, e.g. "openness_option".
[[nodiscard]] std::string option_key(Trait t);

/// Accepts letters, keys, display names and common spellings
/// ("eXtraversion", "Honesty Humility", "Openness").
[[nodiscard]] std::optional<Trait> parse_trait(std::string_view s);

}  // namespace psychoforge
