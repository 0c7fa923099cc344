#include "psychoforge/traits.hpp"

#include "psychoforge/text.hpp"

namespace psychoforge {

std::string_view letter(Trait t) noexcept {
  static constexpr std::array<std::string_view, kTraitCount> k = {"H", "E", "X", "A", "C", "O"};
  return k[index(t)];
}

std::string_view key(Trait t) noexcept {
  static constexpr std::array<std::string_view, kTraitCount> k = {
      "honesty_humility", "emotionality", "extraversion", "agreeableness", "conscientiousness", "openness"};
  return k[index(t)];
}

std::string_view display_name(Trait t) noexcept {
  static constexpr std::array<std::string_view, kTraitCount> k = {
      "Honesty-Humility", "Emotionality", "eXtraversion", "Agreeableness", "Conscientiousness",
      "Openness to Experience"};
  return k[index(t)];
}

std::string option_key(Trait t) { return std::string(key(t)) + "_option"; }

std::optional<Trait> parse_trait(std::string_view s) {
  const auto k = text::label_key(s);
  for (Trait t : kTraits) {
    if (k == text::label_key(letter(t)) || k == text::label_key(key(t)) ||
        k == text::label_key(display_name(t)) || k == text::label_key(option_key(t))) {
      return t;
    }
  }
  if (k == "honesty" || k == "humility") return Trait::H;
  if (k == "opennesstoexperience" || k == "open") return Trait::O;
  return std::nullopt;
}

}  // namespace psychoforge
