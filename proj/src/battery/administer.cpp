#include <cctype>
#include <exception>
#include <numeric>

#include "psychoforge/battery.hpp"
#include "psychoforge/parallel.hpp"
#include "psychoforge/rng.hpp"
#include "psychoforge/text.hpp"

namespace psychoforge::battery {
namespace {

std::string heading(std::string_view field) {
  std::string out;
  bool start = true;
  for (char c : field) {
    if (c == '_') {
      out += ' ';
      start = true;
      continue;
    }
    out += start ? static_cast<char>(std::toupper(static_cast<unsigned char>(c))) : c;
    start = false;
  }
  return out;
}

std::string scale_text(Control c) {
  std::string out;
  for (std::size_t k = 0; k < kLikertLabels.size(); ++k) {
    const std::size_t i = c == Control::Invert ? kLikertLabels.size() - 1 - k : k;
    if (!out.empty()) out += "\n";
    out += "- " + std::string(kLikertLabels[i]);
  }
  return out;
}

std::string options_text(const sjt::SJTItem& item, const PresentationRecord& pres) {
  std::string out;
  for (std::size_t k = 0; k < kTraitCount; ++k) {
    if (!out.empty()) out += "\n";
    out += std::to_string(k + 1) + ". " + item.content.options[index(pres.displayed_order[k])];
  }
  return out;
}

BatterySession start_session(const persona::PersonaRecord& rec, Instrument inst, const provider::Provider& p,
                             const Controls& controls, const Clock& clock, const BatterySession* resume) {
  if (resume != nullptr) {
    if (resume->persona_id != rec.id || resume->instrument != inst || resume->control != controls.control ||
        resume->seed != controls.seed) {
      fail(ErrorCode::InvalidArgument, "resume session does not match persona, instrument, control or seed");
    }
    return *resume;
  }
  BatterySession s;
  s.persona_id = rec.id;
  s.instrument = inst;
  s.model_name = p.config().model_name;
  s.control = controls.control;
  s.seed = controls.seed;
  s.conditioning = std::string(kConditioningId);
  s.started_at = clock();
  return s;
}

struct Slot {
  std::optional<provider::ProviderResult> result;
  std::optional<Error> error;
};

/// Issues the remaining requests with up to max_in_flight in the air and
/// returns per-index outcomes; `make` builds the request for position i.
template <typename Make>
std::vector<Slot> run_requests(std::size_t from, std::size_t n, provider::Provider& p, Make&& make) {
  std::vector<Slot> slots(n);
  const auto workers = static_cast<std::size_t>(std::max(1, p.config().max_in_flight));
  parallel_for(n - from, workers, [&](std::size_t k) {
    const std::size_t i = from + k;
    try {
      slots[i].result = p.complete_structured(make(i));
    } catch (const Error& e) {
      slots[i].error = e;
    }
  });
  return slots;
}

provider::StructuredRequest base_request(const std::string& system_text, std::string user_text, Json schema,
                                         std::string name, std::string tag) {
  provider::StructuredRequest req;
  req.system_text = system_text;
  req.user_text = std::move(user_text);
  req.output_schema = std::move(schema);
  req.schema_name = std::move(name);
  req.request_tag = std::move(tag);
  return req;
}

}  // namespace

std::string render_persona(const persona::PersonaRecord& rec) {
  const auto& d = rec.demographics;
  std::string out = "Demographics:\n";
  out += "Name: " + d.name() + "\n";
  out += "Age: " + std::to_string(d.age) + "\n";
  out += "Sex: " + d.sex + "\n";
  out += "Location: " + d.location + "\n";
  out += "Education Level: " + d.education_level + "\n";
  if (!d.bachelors_field.empty()) out += "Bachelors Field: " + d.bachelors_field + "\n";
  out += "Ethnic Background: " + d.ethnic_background + "\n";
  out += "Marital Status: " + d.marital_status + "\n";
  for (std::size_t i = 0; i < persona::kTextFields.size(); ++i) {
    out += "\n" + heading(persona::kTextFields[i]) + ":\n" + rec.sections[i] + "\n";
  }
  out += "\nPresenting Problems:\n";
  for (const auto& prob : rec.presenting_problems) out += "- " + prob + "\n";
  out += "\nSummary:\n" + rec.summary;
  return out;
}

Json likert_schema() {
  Json labels = Json::array();
  for (auto l : kLikertLabels) labels.push_back(std::string(l));
  return Json{{"type", "object"},
              {"properties", Json{{"answer", Json{{"type", "string"}, {"enum", labels}}}}},
              {"required", Json::array({"answer"})},
              {"additionalProperties", false}};
}

Json choice_schema() {
  Json labels = Json::array();
  for (std::size_t k = 1; k <= kTraitCount; ++k) labels.push_back(static_cast<int>(k));
  return Json{{"type", "object"},
              {"properties", Json{{"choice", Json{{"type", "integer"}, {"enum", labels}}}}},
              {"required", Json::array({"choice"})},
              {"additionalProperties", false}};
}

BatterySession administer_hexaco(const persona::PersonaRecord& rec, const Inventory& inv, const Templates& t,
                                 provider::Provider& p, const Controls& controls, const BatterySession* resume) {
  inv.check();
  const Clock clock = controls.clock ? controls.clock : default_clock();
  BatterySession s = start_session(rec, Instrument::Hexaco100, p, controls, clock, resume);
  if (s.complete) return s;

  std::vector<std::size_t> order(inv.items.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (controls.control == Control::Shuffle) {
    Rng rng(derive_seed(controls.seed, "hexaco-order:" + rec.id));
    rng.shuffle(order);
  }
  if (s.cursor > order.size() || s.likert.size() != s.cursor) {
    fail(ErrorCode::InvalidArgument, "resume cursor is inconsistent with recorded responses");
  }

  const std::string system_text = text::render(t.system_template, {{"persona", render_persona(rec)}}, text::Braces::Double);
  const std::string scale = scale_text(controls.control);
  auto slots = run_requests(s.cursor, order.size(), p, [&](std::size_t i) {
    const auto& item = inv.items[order[i]];
    auto user = text::render(t.hexaco_template, {{"statement", item.text}, {"scale", scale}}, text::Braces::Double);
    return base_request(system_text, std::move(user), likert_schema(), "likert_answer",
                        "administer:hexaco:" + rec.id + ":" + std::to_string(item.item_id));
  });

  for (std::size_t i = s.cursor; i < order.size(); ++i) {
    const auto& item = inv.items[order[i]];
    if (slots[i].error) throw AdministerError(*slots[i].error, std::to_string(item.item_id), s);
    const int value = likert_value(slots[i].result->payload.at("answer").get<std::string>());
    s.likert.push_back({item.item_id, value, static_cast<int>(i)});
    s.cursor = i + 1;
  }
  s.complete = true;
  s.finished_at = clock();
  return s;
}

BatterySession administer_sjt(const persona::PersonaRecord& rec, const std::vector<sjt::SJTItem>& items,
                              const std::string& bank_id, const Templates& t, provider::Provider& p,
                              const Controls& controls, const BatterySession* resume) {
  for (const auto& it : items) it.check();
  const Clock clock = controls.clock ? controls.clock : default_clock();
  BatterySession s = start_session(rec, Instrument::SjtSet, p, controls, clock, resume);
  if (resume == nullptr) s.bank_id = bank_id;
  if (s.complete) return s;
  if (s.cursor > items.size() || s.sjt.size() != s.cursor || s.presentation.size() != s.cursor) {
    fail(ErrorCode::InvalidArgument, "resume cursor is inconsistent with recorded responses");
  }

  std::vector<PresentationRecord> pres;
  pres.reserve(items.size());
  for (const auto& it : items) pres.push_back(present(it.id, controls.control, controls.seed, rec.id));

  const std::string system_text = text::render(t.system_template, {{"persona", render_persona(rec)}}, text::Braces::Double);
  auto slots = run_requests(s.cursor, items.size(), p, [&](std::size_t i) {
    const auto& item = items[i];
    auto user = text::render(t.sjt_template, {{"question", item.content.question}, {"options", options_text(item, pres[i])}},
                             text::Braces::Double);
    auto req = base_request(system_text, std::move(user), choice_schema(), "sjt_choice",
                            "administer:sjt:" + rec.id + ":" + item.id);
    Json opts = Json::array();
    for (std::size_t k = 0; k < kTraitCount; ++k) {
      opts.push_back(Json{{"label", static_cast<int>(k) + 1},
                          {"text", item.content.options[index(pres[i].displayed_order[k])]}});
    }
    req.context = Json{{"options", opts}};
    return req;
  });

  for (std::size_t i = s.cursor; i < items.size(); ++i) {
    SjtResponse resp;
    resp.item_id = items[i].id;
    if (slots[i].error) {
      if (slots[i].error->code() != ErrorCode::SchemaInvalid) throw AdministerError(*slots[i].error, items[i].id, s);
    } else {
      const int label = slots[i].result->payload.at("choice").get<int>();
      resp.label = label;
      resp.trait = pres[i].label_to_trait(label);
    }
    s.sjt.push_back(std::move(resp));
    s.presentation.push_back(pres[i]);
    s.cursor = i + 1;
  }
  s.complete = true;
  s.finished_at = clock();
  return s;
}

}  // namespace psychoforge::battery
