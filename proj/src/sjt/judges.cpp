#include <algorithm>
#include <cmath>

#include "psychoforge/error.hpp"
#include "psychoforge/metrics.hpp"
#include "psychoforge/sjt.hpp"
#include "psychoforge/text.hpp"

namespace psychoforge::sjt {
namespace {

constexpr double kWeightTolerance = 1e-9;

Json score_schema(bool with_overlaps) {
  Json props;
  props["score"] = Json{{"type", "integer"}, {"minimum", 1}, {"maximum", 5}};
  props["justification"] = Json{{"type", "string"}};
  Json req = Json::array({"score", "justification"});
  if (with_overlaps) {
    Json names = Json::array();
    for (Trait t : kTraits) names.push_back(std::string(key(t)));
    for (Trait t : kTraits) names.push_back(std::string(display_name(t)));
    props["overlaps"] = Json{{"type", "array"}, {"items", Json{{"type", "string"}, {"enum", names}}}, {"maxItems", 5}};
    req.push_back("overlaps");
  }
  return Json{{"type", "object"}, {"properties", props}, {"required", req}, {"additionalProperties", false}};
}

Json inferred_schema(const std::vector<std::string>& labels) {
  Json props;
  props["value"] = labels.empty() ? Json{{"type", "string"}} : Json{{"type", "string"}, {"enum", labels}};
  props["confidence"] = Json{{"type", "number"}, {"minimum", 0}, {"maximum", 1}};
  props["justification"] = Json{{"type", "string"}};
  return Json{{"type", "object"},
              {"properties", props},
              {"required", Json::array({"value", "confidence", "justification"})},
              {"additionalProperties", false}};
}

Scored parse_scored(const Json& j) {
  Scored s;
  s.score = j.at("score").get<int>();
  s.justification = j.at("justification").get<std::string>();
  if (s.score < 1 || s.score > 5) fail(ErrorCode::SchemaInvalid, "rubric score out of [1,5]");
  return s;
}

Json scored_json(const Scored& s) { return Json{{"score", s.score}, {"justification", s.justification}}; }

InferredValue parse_inferred(const Json& j) {
  InferredValue v;
  v.value = j.at("value").get<std::string>();
  v.confidence = j.at("confidence").get<double>();
  v.justification = j.at("justification").get<std::string>();
  if (!(v.confidence >= 0.0 && v.confidence <= 1.0)) fail(ErrorCode::SchemaInvalid, "confidence outside [0,1]");
  return v;
}

Json inferred_json(const InferredValue& v) {
  return Json{{"value", v.value}, {"confidence", v.confidence}, {"justification", v.justification}};
}

std::string rubric_item_text(const Options& o) {
  std::string s = o.question;
  for (const auto& opt : o.options) s += "\n" + opt;
  return s;
}

std::optional<double> kappa_or_null(const metrics::RaterLabels& a, const metrics::RaterLabels& b) {
  try {
    return metrics::cohens_kappa(a, b);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::DegenerateAgreement) return std::nullopt;
    throw;
  }
}

}  // namespace

Json RubricOneReport::to_json() const {
  Json j;
  j["scenario_realism"] = scored_json(scenario_realism);
  Json ta;
  for (Trait t : kTraits) {
    const auto& a = trait_alignment[index(t)];
    Json overlaps = Json::array();
    for (Trait o : a.overlaps) overlaps.push_back(std::string(key(o)));
    ta[std::string(key(t))] = Json{{"score", a.score}, {"justification", a.justification}, {"overlaps", overlaps}};
  }
  j["trait_alignment"] = ta;
  j["ethical_tension"] = scored_json(ethical_tension);
  j["fairness"] = scored_json(fairness);
  return j;
}

RubricOneReport RubricOneReport::from_json(const Json& j) {
  RubricOneReport r;
  try {
    r.scenario_realism = parse_scored(j.at("scenario_realism"));
    const Json& ta = j.at("trait_alignment");
    for (Trait t : kTraits) {
      const Json& e = ta.at(std::string(key(t)));
      auto& a = r.trait_alignment[index(t)];
      const Scored s = parse_scored(e);
      a.score = s.score;
      a.justification = s.justification;
      for (const auto& name : e.value("overlaps", Json::array())) {
        const auto o = parse_trait(name.get<std::string>());
        if (!o) fail(ErrorCode::SchemaInvalid, "unknown trait in overlaps: " + name.get<std::string>());
        if (*o == t) {
          fail(ErrorCode::InvariantViolation,
               "trait alignment for " + std::string(key(t)) + " lists its own trait as an overlap");
        }
        if (std::find(a.overlaps.begin(), a.overlaps.end(), *o) == a.overlaps.end()) a.overlaps.push_back(*o);
      }
    }
    r.ethical_tension = parse_scored(j.at("ethical_tension"));
    r.fairness = parse_scored(j.at("fairness"));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Parse, std::string("rubric 1 report: ") + e.what());
  }
  return r;
}

Json rubric1_schema() {
  Json ta_props;
  Json ta_req = Json::array();
  for (Trait t : kTraits) {
    ta_props[std::string(key(t))] = score_schema(true);
    ta_req.push_back(std::string(key(t)));
  }
  Json props;
  props["scenario_realism"] = score_schema(false);
  props["trait_alignment"] =
      Json{{"type", "object"}, {"properties", ta_props}, {"required", ta_req}, {"additionalProperties", false}};
  props["ethical_tension"] = score_schema(false);
  props["fairness"] = score_schema(false);
  return Json{{"type", "object"},
              {"properties", props},
              {"required", Json::array({"scenario_realism", "trait_alignment", "ethical_tension", "fairness"})},
              {"additionalProperties", false}};
}

RubricOneReport judge_rubric1(const SJTItem& item, const Templates& t, provider::Provider& p) {
  const Prompt prompt = build_rubric1_prompt(item.content, item.seed, t);
  provider::StructuredRequest req;
  req.system_text = prompt.system_text;
  req.user_text = prompt.user_text;
  req.output_schema = rubric1_schema();
  req.schema_name = "sjt_rubric1";
  req.request_tag = "sjt:rubric1:" + item.id;
  req.sampling = provider::Sampling{0.0, 1.0, 0.0, 0.0};
  req.context = Json{{"item", item.content.to_payload()}, {"seed_values", item.seed.to_json()}};
  return RubricOneReport::from_json(p.complete_structured(req).payload);
}

std::optional<Trait> OptionInference::primary() const {
  std::optional<Trait> best;
  double w = -1.0;
  for (const auto& [t, v] : weights) {
    if (v > w) {
      w = v;
      best = t;
    }
  }
  return best;
}

const InferredValue& RubricTwoReport::attribute(std::string_view name) const {
  for (const auto& [k, v] : attributes) {
    if (k == name) return v;
  }
  fail(ErrorCode::UnknownField, "rubric 2 report lacks attribute " + std::string(name));
}

Json RubricTwoReport::to_json() const {
  Json j;
  for (const auto& [k, v] : attributes) j[k] = inferred_json(v);
  Json traits;
  for (std::size_t i = 0; i < options.size(); ++i) {
    Json values = Json::object();
    for (const auto& [t, w] : options[i].weights) values[std::string(key(t))] = w;
    traits[std::string(kOptionOrdinals[i])] =
        Json{{"values", values}, {"confidence", options[i].confidence}, {"justification", options[i].justification}};
  }
  j["hexaco_traits"] = traits;
  j["rubric_quality"] = inferred_json(rubric_quality);
  return j;
}

RubricTwoReport RubricTwoReport::from_json(const Json& j, const AttributeDomains& domains) {
  RubricTwoReport r;
  try {
    for (auto name : kInferredAttributes) {
      InferredValue v = parse_inferred(j.at(std::string(name)));
      const auto canon = domains.at(name).canonical(v.value);
      if (!canon) fail(ErrorCode::SchemaInvalid, "value '" + v.value + "' outside domain of " + std::string(name));
      v.value = *canon;
      r.attributes.emplace_back(std::string(name), std::move(v));
    }
    const Json& traits = j.at("hexaco_traits");
    for (std::size_t i = 0; i < kOptionOrdinals.size(); ++i) {
      const Json& o = traits.at(std::string(kOptionOrdinals[i]));
      auto& inf = r.options[i];
      PerTrait<double> w{};
      PerTrait<bool> seen{};
      double total = 0.0;
      for (const auto& [name, weight] : o.at("values").items()) {
        const auto t = parse_trait(name);
        if (!t) fail(ErrorCode::SchemaInvalid, "unknown trait name in weights: " + name);
        const double v = weight.get<double>();
        if (!(v >= 0.0 && v <= 1.0)) fail(ErrorCode::SchemaInvalid, "trait weight outside [0,1]");
        w[index(*t)] += v;
        seen[index(*t)] = true;
        total += v;
      }
      if (total > 1.0 + kWeightTolerance) {
        fail(ErrorCode::SchemaInvalid, std::string(kOptionOrdinals[i]) + ": trait weights sum to " + text::fixed(total, 3));
      }
      for (Trait t : kTraits) {
        if (seen[index(t)]) inf.weights.emplace_back(t, w[index(t)]);
      }
      inf.confidence = o.at("confidence").get<double>();
      if (!(inf.confidence >= 0.0 && inf.confidence <= 1.0)) fail(ErrorCode::SchemaInvalid, "confidence outside [0,1]");
      inf.justification = o.at("justification").get<std::string>();
    }
    r.rubric_quality = parse_inferred(j.at("rubric_quality"));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Parse, std::string("rubric 2 report: ") + e.what());
  }
  return r;
}

Json rubric2_schema(const AttributeDomains& domains) {
  Json props;
  Json req = Json::array();
  for (auto name : kInferredAttributes) {
    props[std::string(name)] = inferred_schema(domains.at(name).accepted_labels());
    req.push_back(std::string(name));
  }
  Json opt_props;
  Json opt_req = Json::array();
  for (auto ord : kOptionOrdinals) {
    opt_props[std::string(ord)] =
        Json{{"type", "object"},
             {"properties",
              Json{{"values", Json{{"type", "object"},
                                   {"additionalProperties", Json{{"type", "number"}, {"minimum", 0}, {"maximum", 1}}}}},
                   {"confidence", Json{{"type", "number"}, {"minimum", 0}, {"maximum", 1}}},
                   {"justification", Json{{"type", "string"}}}}},
             {"required", Json::array({"values", "confidence", "justification"})},
             {"additionalProperties", false}};
    opt_req.push_back(std::string(ord));
  }
  props["hexaco_traits"] =
      Json{{"type", "object"}, {"properties", opt_props}, {"required", opt_req}, {"additionalProperties", false}};
  req.push_back("hexaco_traits");
  props["rubric_quality"] = inferred_schema({"Low", "Medium", "High"});
  req.push_back("rubric_quality");
  return Json{{"type", "object"}, {"properties", props}, {"required", req}, {"additionalProperties", false}};
}

RubricTwoReport judge_rubric2(const SJTItem& item, const AttributeDomains& domains, const Templates& t,
                              provider::Provider& p) {
  const Prompt prompt = build_rubric2_prompt(item.content, t);
  provider::StructuredRequest req;
  req.system_text = prompt.system_text;
  req.user_text = prompt.user_text;
  req.output_schema = rubric2_schema(domains);
  req.schema_name = "sjt_rubric2";
  req.request_tag = "sjt:rubric2:" + item.id;
  req.sampling = provider::Sampling{0.0, 1.0, 0.0, 0.0};
  Json dom = Json::object();
  for (auto name : kInferredAttributes) dom[std::string(name)] = domains.at(name).values;
  req.context = Json{{"domains", dom}, {"text", rubric_item_text(item.content)}};
  return RubricTwoReport::from_json(p.complete_structured(req).payload, domains);
}

std::vector<AgreementRow> seed_recovery_agreement(const std::vector<SeedAttributes>& truths,
                                                  const std::vector<RubricTwoReport>& inferred,
                                                  const AttributeDomains& domains) {
  if (truths.size() != inferred.size()) {
    fail(ErrorCode::LengthMismatch, "seed_recovery_agreement: " + std::to_string(truths.size()) + " truths vs " +
                                        std::to_string(inferred.size()) + " reports");
  }
  std::vector<AgreementRow> rows;
  for (auto name : kInferredAttributes) {
    metrics::RaterLabels a;
    metrics::RaterLabels b;
    for (std::size_t i = 0; i < truths.size(); ++i) {
      const std::string id = std::to_string(i);
      a.items.emplace_back(id, truths[i].at(name));
      b.items.emplace_back(id, inferred[i].attribute(name).value);
    }
    AgreementRow row;
    row.attribute = domains.at(name).display;
    row.items = truths.size();
    if (!truths.empty()) row.kappa = kappa_or_null(a, b);
    rows.push_back(std::move(row));
  }
  return rows;
}

AgreementRow trait_mapping_agreement(const std::vector<RubricTwoReport>& inferred) {
  metrics::RaterLabels a;
  metrics::RaterLabels b;
  for (std::size_t i = 0; i < inferred.size(); ++i) {
    for (std::size_t o = 0; o < kTraitCount; ++o) {
      const std::string id = std::to_string(i) + ":" + std::to_string(o);
      a.items.emplace_back(id, std::string(key(kTraits[o])));
      const auto p = inferred[i].options[o].primary();
      b.items.emplace_back(id, p ? std::string(key(*p)) : std::string(kUnknown));
    }
  }
  AgreementRow row;
  row.attribute = "HEXACO Traits";
  row.items = a.items.size();
  if (!a.items.empty()) row.kappa = kappa_or_null(a, b);
  return row;
}

std::string agreement_table_markdown(const std::vector<AgreementRow>& rows) {
  std::string out = "| Attribute | Cohen's kappa | Items |\n|---|---|---|\n";
  for (const auto& r : rows) {
    out += "| " + r.attribute + " | " + (r.kappa ? text::fixed(*r.kappa, 3) : std::string("n/a")) + " | " +
           std::to_string(r.items) + " |\n";
  }
  return out;
}

}  // namespace psychoforge::sjt
