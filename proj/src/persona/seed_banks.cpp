#include "psychoforge/error.hpp"
#include "psychoforge/persona.hpp"
#include "psychoforge/text.hpp"

namespace psychoforge::persona {
namespace {

Json load_json(const std::filesystem::path& path) {
  try {
    return Json::parse(text::read_file(path));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Parse, path.string() + ": " + e.what());
  }
}

const Json& array_field(const Json& doc, const char* key, const std::filesystem::path& path) {
  if (!doc.is_object() || !doc.contains(key) || !doc[key].is_array()) {
    fail(ErrorCode::Parse, path.string() + ": expected array field '" + key + "'");
  }
  return doc[key];
}

std::vector<MemoirSeed> load_memoirs(const std::filesystem::path& path) {
  const Json doc = load_json(path);
  std::vector<MemoirSeed> out;
  for (const auto& m : array_field(doc, "memoirs", path)) {
    MemoirSeed s;
    s.title = m.value("title", "");
    s.author = m.value("author", "");
    s.year = m.value("year", 0);
    s.summary = m.value("summary", "");
    if (s.title.empty()) fail(ErrorCode::Parse, path.string() + ": memoir without a title");
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<StyleCategory> load_styles(const std::filesystem::path& path, StyleKind kind) {
  const Json doc = load_json(path);
  std::vector<StyleCategory> out;
  for (const auto& c : array_field(doc, "categories", path)) {
    StyleCategory s;
    s.kind = kind;
    s.name = c.value("name", "");
    s.definition = c.value("definition", "");
    if (c.contains("exemplars")) s.exemplars = c["exemplars"].get<std::vector<std::string>>();
    if (s.name.empty()) fail(ErrorCode::Parse, path.string() + ": category without a name");
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

std::string Archetype::description() const {
  return "Core trait: " + core_trait + ". Primary focus: " + primary_focus + ".";
}

void SeedBanks::check() const {
  if (archetypes.empty()) fail(ErrorCode::EmptyBank, "archetype bank is empty");
  if (memoirs.empty()) fail(ErrorCode::EmptyBank, "memoir bank is empty");
  if (appearance.empty()) fail(ErrorCode::EmptyBank, "appearance bank is empty");
  if (behavior.empty()) fail(ErrorCode::EmptyBank, "behavior bank is empty");
}

SeedBanks SeedBanks::load(const std::filesystem::path& dir) {
  SeedBanks b;
  const auto arch_path = dir / "archetypes.json";
  const Json arch = load_json(arch_path);
  for (const auto& a : array_field(arch, "archetypes", arch_path)) {
    b.archetypes.push_back({a.value("name", ""), a.value("core_trait", ""), a.value("primary_focus", "")});
  }
  b.memoirs = load_memoirs(dir / "memoirs.json");
  if (std::filesystem::exists(dir / "memoirs_extra.json")) {
    for (auto& m : load_memoirs(dir / "memoirs_extra.json")) b.memoirs.push_back(std::move(m));
  }
  b.appearance = load_styles(dir / "appearance.json", StyleKind::Appearance);
  b.behavior = load_styles(dir / "behavior.json", StyleKind::Behavior);
  b.check();
  return b;
}

Templates Templates::load(const std::filesystem::path& prompts_dir) {
  Templates t;
  t.system_text = text::read_file(prompts_dir / "persona_system.txt");
  t.user_template = text::read_file(prompts_dir / "persona_user.txt");
  t.judge_system = text::read_file(prompts_dir / "persona_judge.txt");
  return t;
}

}  // namespace psychoforge::persona
