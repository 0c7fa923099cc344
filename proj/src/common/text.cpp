#include "psychoforge/text.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "psychoforge/error.hpp"

namespace psychoforge::text {
namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

struct Token {
  std::size_t begin;
  std::size_t end;  // one past closing brace
  std::string name;
};

std::vector<Token> scan(std::string_view tmpl, Braces style) {
  std::vector<Token> out;
  const std::string_view open = style == Braces::Single ? "{" : "{{";
  const std::string_view close = style == Braces::Single ? "}" : "}}";
  std::size_t pos = 0;
  while (true) {
    auto b = tmpl.find(open, pos);
    if (b == std::string_view::npos) break;
    auto e = tmpl.find(close, b + open.size());
    if (e == std::string_view::npos) break;
    auto inner = trim(tmpl.substr(b + open.size(), e - b - open.size()));
    bool ident = !inner.empty();
    for (char c : inner) {
      if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.')) ident = false;
    }
    if (ident) {
      out.push_back({b, e + close.size(), inner});
      pos = e + close.size();
    } else {
      pos = b + 1;
    }
  }
  return out;
}

}  // namespace

std::vector<std::string> placeholders(std::string_view tmpl, Braces style) {
  std::vector<std::string> names;
  for (auto& t : scan(tmpl, style)) names.push_back(t.name);
  return names;
}

std::string render(std::string_view tmpl, const Vars& vars, Braces style) {
  std::string out;
  std::size_t pos = 0;
  for (const auto& t : scan(tmpl, style)) {
    out.append(tmpl.substr(pos, t.begin - pos));
    auto it = vars.find(t.name);
    if (it == vars.end()) fail(ErrorCode::MissingField, "template placeholder has no value: " + t.name);
    out.append(it->second);
    pos = t.end;
  }
  out.append(tmpl.substr(pos));
  return out;
}

std::vector<std::string> split_whitespace(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_space(s[i])) ++i;
    std::size_t j = i;
    while (j < s.size() && !is_space(s[j])) ++j;
    if (j > i) out.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

std::size_t word_count(std::string_view s) { return split_whitespace(s).size(); }

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

std::string lower_ascii(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string label_key(std::string_view s) {
  std::string out;
  for (unsigned char c : s) {
    if (std::isalnum(c)) out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out.append(sep);
    out.append(parts[i]);
  }
  return out;
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto p = s.find(sep, start);
    if (p == std::string_view::npos) {
      out.emplace_back(s.substr(start));
      break;
    }
    out.emplace_back(s.substr(start, p - start));
    start = p + 1;
  }
  return out;
}

bool glob_match(std::string_view pattern, std::string_view s) {
  std::size_t p = 0, i = 0, star = std::string_view::npos, mark = 0;
  while (i < s.size()) {
    if (p < pattern.size() && (pattern[p] == '?' || pattern[p] == s[i])) {
      ++p;
      ++i;
    } else if (p < pattern.size() && pattern[p] == '*') {
      star = p++;
      mark = i;
    } else if (star != std::string_view::npos) {
      p = star + 1;
      i = ++mark;
    } else {
      return false;
    }
  }
  while (p < pattern.size() && pattern[p] == '*') ++p;
  return p == pattern.size();
}

std::string fixed(double v, int precision) {
  if (v == 0.0) v = 0.0;  // drop negative zero
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  std::string out = buf;
  if (out.starts_with("-") && out.find_first_not_of("-0.") == std::string::npos) out.erase(0, 1);
  return out;
}

std::string signed_fixed(double v, int precision) {
  auto s = fixed(v, precision);
  if (!s.starts_with("-") && s.find_first_not_of("0.") != std::string::npos) s.insert(0, "+");
  return s;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot read file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::Io, "cannot write file: " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) fail(ErrorCode::Io, "short write: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace psychoforge::text
