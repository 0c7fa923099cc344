#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace psychoforge::text {

enum class Braces {
  Single,  // {name}
  Double,  // {{ name }}
};

using Vars = std::map<std::string, std::string, std::less<>>;

/// Names of all placeholders in template order (duplicates kept).
[[nodiscard]] std::vector<std::string> placeholders(std::string_view tmpl, Braces style);

/// Substitute every placeholder; a placeholder without a value throws
/// Error{MissingField}. Text outside placeholders is copied verbatim.
[[nodiscard]] std::string render(std::string_view tmpl, const Vars& vars, Braces style);

[[nodiscard]] std::vector<std::string> split_whitespace(std::string_view s);
[[nodiscard]] std::size_t word_count(std::string_view s);

[[nodiscard]] std::string trim(std::string_view s);
[[nodiscard]] std::string lower_ascii(std::string_view s);
/// Lowercase ASCII letters and digits only; used to compare labels such as
/// "Non-Binary" and "Non Binary".
[[nodiscard]] std::string label_key(std::string_view s);
[[nodiscard]] std::string join(const std::vector<std::string>& parts, std::string_view sep);
[[nodiscard]] std::vector<std::string> split(std::string_view s, char sep);

/// Shell-style glob supporting '*' and '?'.
[[nodiscard]] bool glob_match(std::string_view pattern, std::string_view s);

[[nodiscard]] std::string fixed(double v, int precision);
/// Fixed with explicit sign for positive values ("+1.38", "-0.59", "0.00").
[[nodiscard]] std::string signed_fixed(double v, int precision);

[[nodiscard]] std::string read_file(const std::filesystem::path& path);
/// Write through a temporary sibling and rename into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace psychoforge::text
