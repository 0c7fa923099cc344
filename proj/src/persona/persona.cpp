#include <algorithm>
#include <cctype>
#include <map>
#include <unordered_set>

#include "psychoforge/error.hpp"
#include "psychoforge/metrics.hpp"
#include "psychoforge/persona.hpp"
#include "psychoforge/text.hpp"

namespace psychoforge::persona {
namespace {

std::vector<std::string> pick_exemplars(const StyleCategory& cat, Rng& rng) {
  const std::size_t n = cat.exemplars.size();
  const std::size_t k = std::min(n, kMaxExemplars);
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  // Partial Fisher-Yates: the first k slots become a uniform k-subset.
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  std::vector<std::string> out;
  for (auto i : idx) out.push_back(cat.exemplars[i]);
  return out;
}

std::vector<std::string> normalized_words(std::string_view s) {
  std::vector<std::string> out;
  for (auto& w : text::split_whitespace(s)) {
    std::string cleaned;
    for (char c : w) {
      if (std::isalnum(static_cast<unsigned char>(c))) cleaned.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    if (!cleaned.empty()) out.push_back(std::move(cleaned));
  }
  return out;
}

std::string require(const std::string& v, const char* what) {
  if (text::trim(v).empty()) fail(ErrorCode::MissingField, std::string("persona selection has empty ") + what);
  return v;
}

std::size_t field_index(std::string_view field) {
  for (std::size_t i = 0; i < kTextFields.size(); ++i) {
    if (kTextFields[i] == field) return i;
  }
  fail(ErrorCode::UnknownField, "unknown persona section: " + std::string(field));
}

std::string display_label(std::string_view key) {
  std::string out;
  bool start = true;
  for (char c : key) {
    if (c == '_') {
      out.push_back(' ');
      start = true;
    } else {
      out.push_back(start ? static_cast<char>(std::toupper(static_cast<unsigned char>(c))) : c);
      start = false;
    }
  }
  return out;
}

Json string_enum(const std::string& v) { return Json{{"type", "string"}, {"enum", Json::array({v})}}; }

}  // namespace

Selection select_seeds(const DemographicProfile& profile, const SeedBanks& banks, Rng& rng) {
  banks.check();
  Selection s;
  s.demographics = profile;
  s.archetype = banks.archetypes[rng.below(banks.archetypes.size())];
  s.memoir = banks.memoirs[rng.below(banks.memoirs.size())];
  s.appearance = banks.appearance[rng.below(banks.appearance.size())];
  s.behavior = banks.behavior[rng.below(banks.behavior.size())];
  s.appearance_examples = pick_exemplars(s.appearance, rng);
  s.behavior_examples = pick_exemplars(s.behavior, rng);
  return s;
}

Prompt build_persona_prompt(const Selection& sel, const Templates& t) {
  text::Vars v;
  v["archetype_name"] = require(sel.archetype.name, "archetype name");
  require(sel.archetype.core_trait, "archetype description");
  require(sel.archetype.primary_focus, "archetype description");
  v["archetype_desc"] = sel.archetype.description();
  v["memoir_title"] = require(sel.memoir.title, "memoir title");
  v["memoir_summary"] = require(sel.memoir.summary, "memoir summary");
  v["dem.name"] = require(text::trim(sel.demographics.name()), "demographic name");
  v["dem.age"] = std::to_string(sel.demographics.age);
  v["dem.location"] = require(sel.demographics.location, "demographic location");
  v["dem.education_level"] = require(sel.demographics.education_level, "demographic education level");
  v["appearance_cat"] = require(sel.appearance.name, "appearance category");
  v["behavior_cat"] = require(sel.behavior.name, "behavior category");
  if (sel.appearance_examples.empty()) fail(ErrorCode::MissingField, "persona selection has no appearance examples");
  if (sel.behavior_examples.empty()) fail(ErrorCode::MissingField, "persona selection has no behavior examples");
  v["appearance_examples_list"] = text::join(sel.appearance_examples, "\n- ");
  v["behavior_examples_list"] = text::join(sel.behavior_examples, "\n- ");
  Prompt p;
  p.system_text = t.system_text;
  p.user_text = text::render(t.user_template, v, text::Braces::Single);
  return p;
}

const std::string& PersonaRecord::section(std::string_view field) const { return sections[field_index(field)]; }
std::string& PersonaRecord::section(std::string_view field) { return sections[field_index(field)]; }

Json PersonaRecord::to_json() const {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["id"] = id;
  j["demographics"] = demographics.to_json();
  j["archetype_name"] = archetype_name;
  j["memoir_title"] = memoir_title;
  j["appearance_category"] = appearance_category;
  j["behavior_category"] = behavior_category;
  j["appearance_examples"] = appearance_examples;
  j["behavior_examples"] = behavior_examples;
  for (std::size_t i = 0; i < kTextFields.size(); ++i) j[std::string(kTextFields[i])] = sections[i];
  j["presenting_problems"] = presenting_problems;
  j["summary"] = summary;
  return j;
}

PersonaRecord PersonaRecord::from_json(const Json& j) {
  PersonaRecord r;
  try {
    r.id = j.at("id").get<std::string>();
    r.demographics = DemographicProfile::from_json(j.at("demographics"));
    r.archetype_name = j.value("archetype_name", "");
    r.memoir_title = j.value("memoir_title", "");
    r.appearance_category = j.value("appearance_category", "");
    r.behavior_category = j.value("behavior_category", "");
    if (j.contains("appearance_examples")) r.appearance_examples = j["appearance_examples"].get<std::vector<std::string>>();
    if (j.contains("behavior_examples")) r.behavior_examples = j["behavior_examples"].get<std::vector<std::string>>();
    for (std::size_t i = 0; i < kTextFields.size(); ++i) r.sections[i] = j.at(std::string(kTextFields[i])).get<std::string>();
    r.presenting_problems = j.at("presenting_problems").get<std::vector<std::string>>();
    r.summary = j.at("summary").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Parse, std::string("persona record: ") + e.what());
  }
  return r;
}

Json persona_output_schema(const DemographicProfile& locked) {
  Json dem_props;
  dem_props["name"] = string_enum(locked.name());
  dem_props["age"] = Json{{"type", "integer"}, {"enum", Json::array({locked.age})}};
  dem_props["location"] = string_enum(locked.location);
  dem_props["education_level"] = string_enum(locked.education_level);
  Json props;
  props["demographics"] = Json{{"type", "object"},
                               {"properties", dem_props},
                               {"required", Json::array({"name", "age", "location", "education_level"})},
                               {"additionalProperties", false}};
  Json required = Json::array({"demographics"});
  for (auto f : kTextFields) {
    props[std::string(f)] = Json{{"type", "string"}, {"minLength", 1}};
    required.push_back(std::string(f));
  }
  props["presenting_problems"] = Json{{"type", "array"}, {"items", Json{{"type", "string"}, {"minLength", 1}}}};
  props["summary"] = Json{{"type", "string"}, {"minLength", 1}};
  required.push_back("presenting_problems");
  required.push_back("summary");
  return Json{{"type", "object"}, {"properties", props}, {"required", required}, {"additionalProperties", false}};
}

PersonaRecord record_from_payload(const Json& payload, const Selection& sel) {
  PersonaRecord r;
  r.id = "persona-" + sel.demographics.id;
  r.demographics = sel.demographics;
  const Json& d = payload.at("demographics");
  const auto name = d.at("name").get<std::string>();
  if (name != sel.demographics.name()) {
    const auto cut = name.rfind(' ');
    r.demographics.given_name = cut == std::string::npos ? name : name.substr(0, cut);
    r.demographics.surname = cut == std::string::npos ? std::string() : name.substr(cut + 1);
  }
  r.demographics.age = d.at("age").get<int>();
  r.demographics.location = d.at("location").get<std::string>();
  r.demographics.education_level = d.at("education_level").get<std::string>();
  r.archetype_name = sel.archetype.name;
  r.memoir_title = sel.memoir.title;
  r.appearance_category = sel.appearance.name;
  r.behavior_category = sel.behavior.name;
  r.appearance_examples = sel.appearance_examples;
  r.behavior_examples = sel.behavior_examples;
  for (std::size_t i = 0; i < kTextFields.size(); ++i) r.sections[i] = payload.at(std::string(kTextFields[i])).get<std::string>();
  r.presenting_problems = payload.at("presenting_problems").get<std::vector<std::string>>();
  r.summary = payload.at("summary").get<std::string>();
  return r;
}

std::optional<std::string> shared_run(std::string_view text, std::string_view source, std::size_t n) {
  if (n == 0) return std::nullopt;
  const auto src = normalized_words(source);
  const auto txt = normalized_words(text);
  if (src.size() < n || txt.size() < n) return std::nullopt;
  std::unordered_set<std::string> grams;
  for (std::size_t i = 0; i + n <= src.size(); ++i) {
    grams.insert(text::join({src.begin() + static_cast<std::ptrdiff_t>(i), src.begin() + static_cast<std::ptrdiff_t>(i + n)}, " "));
  }
  for (std::size_t i = 0; i + n <= txt.size(); ++i) {
    auto g = text::join({txt.begin() + static_cast<std::ptrdiff_t>(i), txt.begin() + static_cast<std::ptrdiff_t>(i + n)}, " ");
    if (grams.count(g) != 0) return g;
  }
  return std::nullopt;
}

ValidationReport validate_persona(const PersonaRecord& rec, const DemographicProfile& locked,
                                  const std::vector<std::string>& seed_texts) {
  ValidationReport rep;
  const auto& d = rec.demographics;
  auto literal = [&](bool same, const char* field) {
    if (!same) rep.failures.push_back(std::string("demographic literal mismatch: ") + field);
  };
  literal(d.id == locked.id, "id");
  literal(d.name() == locked.name(), "name");
  literal(d.age == locked.age, "age");
  literal(d.sex == locked.sex, "sex");
  literal(d.location == locked.location, "location");
  literal(d.education_level == locked.education_level, "education_level");
  literal(d.bachelors_field == locked.bachelors_field, "bachelors_field");
  literal(d.ethnic_background == locked.ethnic_background, "ethnic_background");
  literal(d.marital_status == locked.marital_status, "marital_status");

  const auto words = text::word_count(rec.memoir_narrative());
  if (words < kNarrativeMinWords || words > kNarrativeMaxWords) {
    rep.failures.push_back("memoir_narrative word count " + std::to_string(words) + " ∉ [" +
                           std::to_string(kNarrativeMinWords) + "," + std::to_string(kNarrativeMaxWords) + "]");
  }
  const auto problems = rec.presenting_problems.size();
  if (problems < kMinProblems || problems > kMaxProblems) {
    rep.failures.push_back("presenting_problems count " + std::to_string(problems) + " ∉ [" +
                           std::to_string(kMinProblems) + "," + std::to_string(kMaxProblems) + "]");
  }

  std::vector<std::pair<std::string, const std::string*>> fields;
  for (std::size_t i = 0; i < kTextFields.size(); ++i) fields.emplace_back(std::string(kTextFields[i]), &rec.sections[i]);
  fields.emplace_back("summary", &rec.summary);
  for (std::size_t i = 0; i < rec.presenting_problems.size(); ++i) {
    fields.emplace_back("presenting_problems[" + std::to_string(i) + "]", &rec.presenting_problems[i]);
  }
  for (const auto& seed : seed_texts) {
    for (const auto& [name, value] : fields) {
      if (auto run = shared_run(*value, seed)) {
        rep.failures.push_back("5-gram overlap with seed text in " + name + ": \"" + *run + "\"");
        break;
      }
    }
  }
  return rep;
}

ValidationReport validate_persona(const PersonaRecord& rec, const Selection& sel) {
  return validate_persona(rec, sel.demographics, {sel.archetype.description(), sel.memoir.summary});
}

GenerationOutcome generate_persona(const Selection& sel, const Templates& t, provider::Provider& p,
                                   const GenParams& params) {
  if (params.regenerations < 1) fail(ErrorCode::InvalidArgument, "regenerations must be >= 1");
  const Prompt prompt = build_persona_prompt(sel, t);
  provider::StructuredRequest req;
  req.system_text = prompt.system_text;
  req.user_text = prompt.user_text;
  req.output_schema = persona_output_schema(sel.demographics);
  req.schema_name = "persona_record";
  req.request_tag = "persona:" + sel.demographics.id;
  req.sampling = params.sampling;
  req.context = Json{{"demographics", sel.demographics.to_json()},
                     {"archetype", sel.archetype.name},
                     {"memoir", sel.memoir.title}};
  std::string last;
  for (int round = 0; round < params.regenerations; ++round) {
    req.sample_index = round;
    const auto res = p.complete_structured(req);
    PersonaRecord rec = record_from_payload(res.payload, sel);
    const auto rep = validate_persona(rec, sel);
    if (rep.ok()) return {std::move(rec), round + 1};
    last = rep.failures.front();
  }
  throw Error(ErrorCode::ExhaustedRetries,
              "persona " + sel.demographics.id + " failed validation " + std::to_string(params.regenerations) +
                  " times; last: " + last,
              params.regenerations);
}

int PersonaRubricScores::score(std::string_view field) const {
  for (std::size_t i = 0; i < kRubricFields.size(); ++i) {
    if (kRubricFields[i] == field) return scores[i];
  }
  fail(ErrorCode::UnknownField, "unknown rubric field: " + std::string(field));
}

Json PersonaRubricScores::to_json() const {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["uid"] = uid;
  for (std::size_t i = 0; i < kRubricFields.size(); ++i) j[std::string(kRubricFields[i])] = scores[i];
  return j;
}

PersonaRubricScores PersonaRubricScores::from_json(const Json& j) {
  PersonaRubricScores s;
  try {
    s.uid = j.at("uid").get<std::string>();
    for (std::size_t i = 0; i < kRubricFields.size(); ++i) s.scores[i] = j.at(std::string(kRubricFields[i])).get<int>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Parse, std::string("persona rubric scores: ") + e.what());
  }
  for (auto v : s.scores) {
    if (v < 0 || v > 5) fail(ErrorCode::SchemaInvalid, "persona rubric score out of [0,5]: " + std::to_string(v));
  }
  return s;
}

Json rubric_output_schema(const std::string& uid) {
  Json props;
  Json required = Json::array();
  for (auto f : kRubricFields) {
    props[std::string(f)] = Json{{"type", "integer"}, {"minimum", 0}, {"maximum", 5}};
    required.push_back(std::string(f));
  }
  props["uid"] = string_enum(uid);
  required.push_back("uid");
  return Json{{"type", "object"}, {"properties", props}, {"required", required}, {"additionalProperties", false}};
}

PersonaRubricScores judge_persona(const PersonaRecord& rec, const Templates& t, provider::Provider& p) {
  provider::StructuredRequest req;
  req.system_text = t.judge_system;
  req.user_text = "UID: " + rec.id + "\n\nDataset entry:\n" + rec.to_json().dump(2);
  req.output_schema = rubric_output_schema(rec.id);
  req.schema_name = "persona_rubric";
  req.request_tag = "judge:persona:" + rec.id;
  req.sampling = provider::Sampling{0.0, 1.0, 0.0, 0.0};
  req.context = Json{{"uid", rec.id}};
  const auto res = p.complete_structured(req);
  return PersonaRubricScores::from_json(res.payload);
}

std::array<double, kRubricFields.size()> rubric_means(const std::vector<PersonaRubricScores>& rows) {
  std::array<double, kRubricFields.size()> m{};
  if (rows.empty()) return m;
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < m.size(); ++i) m[i] += r.scores[i];
  }
  for (auto& v : m) v /= static_cast<double>(rows.size());
  return m;
}

std::string rubric_table_markdown(const std::vector<PersonaRubricScores>& llm,
                                  const std::vector<PersonaRubricScores>& human) {
  const auto lm = rubric_means(llm);
  const bool with_human = !human.empty();
  const auto hm = rubric_means(human);

  std::map<std::string, std::size_t> human_by_uid;
  for (std::size_t i = 0; i < human.size(); ++i) human_by_uid.emplace(human[i].uid, i);
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < llm.size(); ++i) {
    if (auto it = human_by_uid.find(llm[i].uid); it != human_by_uid.end()) pairs.emplace_back(it->second, i);
  }

  std::string out;
  if (with_human) {
    out += "| Criterion | Human | LLM Judge | Kappa |\n|---|---|---|---|\n";
  } else {
    out += "| Criterion | LLM Judge |\n|---|---|\n";
  }
  for (std::size_t f = 0; f < kRubricFields.size(); ++f) {
    out += "| " + display_label(kRubricFields[f]) + " | ";
    if (with_human) {
      std::string kappa = "n/a";
      if (!pairs.empty()) {
        metrics::RaterLabels a;
        metrics::RaterLabels b;
        for (auto [h, l] : pairs) {
          a.items.emplace_back(human[h].uid, std::to_string(human[h].scores[f]));
          b.items.emplace_back(llm[l].uid, std::to_string(llm[l].scores[f]));
        }
        try {
          kappa = text::fixed(metrics::cohens_kappa(a, b), 3);
        } catch (const Error&) {
          kappa = "n/a";
        }
      }
      out += text::fixed(hm[f], 3) + " | " + text::fixed(lm[f], 3) + " | " + kappa + " |\n";
    } else {
      out += text::fixed(lm[f], 3) + " |\n";
    }
  }
  out += "\nRatings: " + std::to_string(llm.size()) + " judged";
  if (with_human) out += ", " + std::to_string(human.size()) + " human";
  out += ".\n";
  return out;
}

}  // namespace psychoforge::persona
