#include <cctype>

#include "psychoforge/error.hpp"
#include "psychoforge/hashing.hpp"
#include "psychoforge/sjt.hpp"
#include "psychoforge/text.hpp"

namespace psychoforge::sjt {
namespace {

constexpr std::string_view kUserMarker = "===USER===";

bool placeholder_char(char c) {
  return std::islower(static_cast<unsigned char>(c)) || std::isdigit(static_cast<unsigned char>(c)) || c == '_';
}

/// Maps a bracket name to a seed attribute: "time_of_day" or "suspect2_age".
std::string resolve_name(const std::string& name) {
  if (name.rfind("suspect", 0) == 0) {
    std::size_t i = 7;
    while (i < name.size() && std::isdigit(static_cast<unsigned char>(name[i]))) ++i;
    if (i > 7 && i < name.size() && name[i] == '_') return name.substr(i + 1);
  }
  return name;
}

text::Vars seed_vars(const SeedAttributes& seed) {
  text::Vars v;
  for (auto name : kAttributeNames) v[std::string(name)] = seed.at(name);
  return v;
}

}  // namespace

Json Options::to_payload() const {
  Json j;
  j["question"] = question;
  for (Trait t : kTraits) j[option_key(t)] = options[index(t)];
  return j;
}

Options Options::from_payload(const Json& j) {
  Options o;
  try {
    o.question = j.at("question").get<std::string>();
    for (Trait t : kTraits) o.options[index(t)] = j.at(option_key(t)).get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Parse, std::string("SJT payload: ") + e.what());
  }
  return o;
}

void check_base(const BaseScenario& base) {
  if (text::trim(base.template_question).empty()) fail(ErrorCode::MissingField, base.id + ": empty question");
  for (Trait t : kTraits) {
    if (text::trim(base.options[index(t)]).empty()) {
      fail(ErrorCode::MissingField, base.id + ": missing " + option_key(t));
    }
  }
}

std::vector<BaseScenario> load_base_scenarios(const std::filesystem::path& path) {
  Json doc;
  try {
    doc = Json::parse(text::read_file(path));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Parse, path.string() + ": " + e.what());
  }
  std::vector<BaseScenario> out;
  for (const auto& b : doc.at("base_scenarios")) {
    BaseScenario s;
    s.id = b.at("id").get<std::string>();
    s.template_question = b.at("template_question").get<std::string>();
    const Json& opts = b.at("options");
    for (Trait t : kTraits) s.options[index(t)] = opts.value(std::string(key(t)), "");
    check_base(s);
    out.push_back(std::move(s));
  }
  if (out.empty()) fail(ErrorCode::EmptyBank, path.string() + ": no base scenarios");
  return out;
}

std::string instantiate_text(std::string_view tmpl, const SeedAttributes& seed) {
  std::string out;
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    const auto open = tmpl.find('[', pos);
    if (open == std::string_view::npos) break;
    auto close = open + 1;
    while (close < tmpl.size() && placeholder_char(tmpl[close])) ++close;
    if (close == open + 1 || !std::islower(static_cast<unsigned char>(tmpl[open + 1])) || close >= tmpl.size() ||
        tmpl[close] != ']') {
      out.append(tmpl.substr(pos, open + 1 - pos));
      pos = open + 1;
      continue;
    }
    const std::string name(tmpl.substr(open + 1, close - open - 1));
    const auto* value = seed.find(resolve_name(name));
    if (value == nullptr) fail(ErrorCode::UnknownPlaceholder, "unknown placeholder [" + name + "]");
    out.append(tmpl.substr(pos, open - pos));
    out.append(*value);
    pos = close + 1;
  }
  out.append(tmpl.substr(pos));
  return out;
}

Options instantiate_template(const BaseScenario& base, const SeedAttributes& seed) {
  check_base(base);
  Options o;
  o.question = instantiate_text(base.template_question, seed);
  for (Trait t : kTraits) o.options[index(t)] = instantiate_text(base.options[index(t)], seed);
  return o;
}

bool has_placeholder(std::string_view s) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '[') continue;
    std::size_t j = i + 1;
    while (j < s.size() && placeholder_char(s[j])) ++j;
    if (j > i + 1 && std::islower(static_cast<unsigned char>(s[i + 1])) && j < s.size() && s[j] == ']') return true;
  }
  return false;
}

std::string_view to_string(ItemStatus s) noexcept {
  switch (s) {
    case ItemStatus::Draft: return "draft";
    case ItemStatus::Clean: return "clean";
    case ItemStatus::BudgetExhausted: return "budget_exhausted";
  }
  return "draft";
}

void SJTItem::check() const {
  if (text::trim(content.question).empty()) fail(ErrorCode::InvariantViolation, id + ": empty question");
  if (has_placeholder(content.question)) fail(ErrorCode::InvariantViolation, id + ": unresolved placeholder in question");
  for (Trait t : kTraits) {
    const auto& o = content.options[index(t)];
    if (text::trim(o).empty()) fail(ErrorCode::InvariantViolation, id + ": empty " + option_key(t));
    if (has_placeholder(o)) fail(ErrorCode::InvariantViolation, id + ": unresolved placeholder in " + option_key(t));
  }
}

Json SJTItem::to_json() const {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["id"] = id;
  j["base_id"] = base_id;
  j["seed"] = seed.to_json();
  j["question"] = content.question;
  Json opts;
  for (Trait t : kTraits) opts[std::string(key(t))] = content.options[index(t)];
  j["options"] = opts;
  j["lineage"] = lineage;
  j["status"] = std::string(to_string(status));
  return j;
}

SJTItem SJTItem::from_json(const Json& j) {
  SJTItem it;
  try {
    it.id = j.at("id").get<std::string>();
    it.base_id = j.value("base_id", "");
    it.seed = SeedAttributes::from_json(j.at("seed"));
    it.content.question = j.at("question").get<std::string>();
    for (Trait t : kTraits) it.content.options[index(t)] = j.at("options").at(std::string(key(t))).get<std::string>();
    if (j.contains("lineage")) it.lineage = j["lineage"].get<std::vector<std::string>>();
    const auto status = j.value("status", std::string("draft"));
    if (status == "clean") {
      it.status = ItemStatus::Clean;
    } else if (status == "budget_exhausted") {
      it.status = ItemStatus::BudgetExhausted;
    } else if (status == "draft") {
      it.status = ItemStatus::Draft;
    } else {
      fail(ErrorCode::Parse, "unknown item status: " + status);
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Parse, std::string("SJT item: ") + e.what());
  }
  return it;
}

std::string item_id(const std::string& base_id, const SeedAttributes& seed, const Options& content) {
  Json k;
  k["base_id"] = base_id;
  k["seed"] = seed.to_json();
  k["content"] = content.to_payload();
  return "sjt-" + sha256_hex(k.dump()).substr(0, 16);
}

std::vector<SJTItem> load_bank(const std::filesystem::path& path) {
  const auto rows = jsonl::read(path);
  if (!rows.empty()) (void)jsonl::check_schema_version(rows, path);
  std::vector<SJTItem> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(SJTItem::from_json(r));
  return out;
}

void save_bank(const std::filesystem::path& path, const std::vector<SJTItem>& items) {
  std::vector<Json> rows;
  rows.reserve(items.size());
  for (const auto& it : items) rows.push_back(it.to_json());
  jsonl::write(path, rows);
}

PromptTemplate PromptTemplate::parse(std::string_view text) {
  PromptTemplate p;
  const auto at = text.find(kUserMarker);
  if (at == std::string_view::npos) {
    p.user_template = std::string(text);
    return p;
  }
  p.system_text = text::trim(text.substr(0, at));
  auto rest = text.substr(at + kUserMarker.size());
  if (!rest.empty() && rest.front() == '\n') rest.remove_prefix(1);
  p.user_template = std::string(rest);
  return p;
}

PromptTemplate PromptTemplate::load(const std::filesystem::path& path) { return parse(text::read_file(path)); }

Templates Templates::load(const std::filesystem::path& dir) {
  Templates t;
  t.create = PromptTemplate::load(dir / "sjt_create.txt");
  t.trait_bleed = PromptTemplate::load(dir / "sjt_trait_bleed.txt");
  t.rubric1 = PromptTemplate::load(dir / "sjt_rubric1.txt");
  t.rubric2 = PromptTemplate::load(dir / "sjt_rubric2.txt");
  t.paraphrase = PromptTemplate::load(dir / "sjt_paraphrase.txt");
  return t;
}

std::string answer_options_text(const Options& o) {
  std::string out;
  for (Trait t : kTraits) {
    if (!out.empty()) out += "\n";
    out += std::to_string(index(t) + 1) + ". " + o.options[index(t)];
  }
  return out;
}

Prompt build_variant_prompt(const BaseScenario& base, const SeedAttributes& seed, const Templates& t) {
  check_base(base);
  const Options filled = instantiate_template(base, seed);
  text::Vars v = seed_vars(seed);
  std::string scenario = "Question: " + filled.question + "\n\nAnswer Options:";
  for (Trait tr : kTraits) scenario += "\n" + std::string(display_name(tr)) + ": " + filled.options[index(tr)];
  v["base_scenario"] = scenario;
  return {t.create.system_text, text::render(t.create.user_template, v, text::Braces::Double)};
}

Prompt build_trait_bleed_prompt(const Options& content, const Templates& t) {
  text::Vars v;
  v["question"] = Json(content.question).dump();
  for (Trait tr : kTraits) v[option_key(tr)] = Json(content.options[index(tr)]).dump();
  return {t.trait_bleed.system_text, text::render(t.trait_bleed.user_template, v, text::Braces::Double)};
}

Prompt build_rubric1_prompt(const Options& content, const SeedAttributes& seed, const Templates& t) {
  text::Vars v = seed_vars(seed);
  v["question"] = content.question;
  v["answer_options"] = answer_options_text(content);
  return {t.rubric1.system_text, text::render(t.rubric1.user_template, v, text::Braces::Double)};
}

Prompt build_rubric2_prompt(const Options& content, const Templates& t) {
  text::Vars v;
  v["question"] = content.question;
  v["answer_options"] = answer_options_text(content);
  return {t.rubric2.system_text, text::render(t.rubric2.user_template, v, text::Braces::Double)};
}

Json options_schema() {
  Json props;
  Json required = Json::array();
  props["question"] = Json{{"type", "string"}, {"minLength", 1}};
  required.push_back("question");
  for (Trait t : kTraits) {
    props[option_key(t)] = Json{{"type", "string"}, {"minLength", 1}};
    required.push_back(option_key(t));
  }
  return Json{{"type", "object"}, {"properties", props}, {"required", required}, {"additionalProperties", false}};
}

}  // namespace psychoforge::sjt
