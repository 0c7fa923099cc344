#include "psychoforge/error.hpp"
#include "psychoforge/sjt.hpp"
#include "psychoforge/text.hpp"

namespace psychoforge::sjt {
namespace {

provider::StructuredRequest request_for(const Prompt& prompt, Json schema, std::string name, std::string tag) {
  provider::StructuredRequest req;
  req.system_text = prompt.system_text;
  req.user_text = prompt.user_text;
  req.output_schema = std::move(schema);
  req.schema_name = std::move(name);
  req.request_tag = std::move(tag);
  return req;
}

Json nullable_string() { return Json{{"type", Json::array({"string", "null"})}}; }

}  // namespace

SJTItem generate_sjt(const BaseScenario& base, const SeedAttributes& seed, const Templates& t, provider::Provider& p,
                     const std::string& key, const GenParams& params) {
  const Prompt prompt = build_variant_prompt(base, seed, t);
  auto req = request_for(prompt, options_schema(), "sjt_item", "sjt:create:" + key);
  req.sampling = params.sampling;
  req.context = Json{{"draft", instantiate_template(base, seed).to_payload()}, {"seed_values", seed.to_json()}};
  const auto res = p.complete_structured(req);
  SJTItem item;
  item.base_id = base.id;
  item.seed = seed;
  item.content = Options::from_payload(res.payload);
  item.id = item_id(base.id, seed, item.content);
  item.check();
  return item;
}

bool TraitBleedReport::clean(int threshold) const {
  for (const auto& f : fits) {
    if (f.score < threshold) return false;
  }
  return true;
}

Json TraitBleedReport::to_json() const {
  Json j;
  j["scenario_summary"] = scenario_summary;
  Json evals;
  for (Trait t : kTraits) {
    const auto& f = fits[index(t)];
    Json e;
    e["score"] = f.score;
    e["analysis"] = f.analysis;
    e["suggested_correction"] = f.suggested_correction ? Json(*f.suggested_correction) : Json(nullptr);
    evals[std::string(key(t))] = e;
  }
  j["trait_evaluations"] = evals;
  j["corrected_sjt"] = corrected.to_payload();
  j["overall_notes"] = overall_notes;
  return j;
}

TraitBleedReport TraitBleedReport::from_json(const Json& j) {
  TraitBleedReport r;
  try {
    r.scenario_summary = j.at("scenario_summary").get<std::string>();
    const Json& evals = j.at("trait_evaluations");
    for (Trait t : kTraits) {
      const Json& e = evals.at(std::string(key(t)));
      auto& f = r.fits[index(t)];
      f.score = e.at("score").get<int>();
      f.analysis = e.at("analysis").get<std::string>();
      if (e.contains("suggested_correction") && e["suggested_correction"].is_string()) {
        f.suggested_correction = e["suggested_correction"].get<std::string>();
      }
    }
    r.corrected = Options::from_payload(j.at("corrected_sjt"));
    r.overall_notes = j.at("overall_notes").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Parse, std::string("trait bleed report: ") + e.what());
  }
  for (const auto& f : r.fits) {
    if (f.score < 1 || f.score > 5) fail(ErrorCode::SchemaInvalid, "trait fit score out of [1,5]");
  }
  return r;
}

Json trait_bleed_schema() {
  Json evals_props;
  Json evals_req = Json::array();
  for (Trait t : kTraits) {
    evals_props[std::string(key(t))] =
        Json{{"type", "object"},
             {"properties", Json{{"score", Json{{"type", "integer"}, {"minimum", 1}, {"maximum", 5}}},
                                 {"analysis", Json{{"type", "string"}}},
                                 {"suggested_correction", nullable_string()}}},
             {"required", Json::array({"score", "analysis", "suggested_correction"})},
             {"additionalProperties", false}};
    evals_req.push_back(std::string(key(t)));
  }
  Json props;
  props["scenario_summary"] = Json{{"type", "string"}};
  props["trait_evaluations"] =
      Json{{"type", "object"}, {"properties", evals_props}, {"required", evals_req}, {"additionalProperties", false}};
  props["corrected_sjt"] = options_schema();
  props["overall_notes"] = Json{{"type", "string"}};
  return Json{{"type", "object"},
              {"properties", props},
              {"required", Json::array({"scenario_summary", "trait_evaluations", "corrected_sjt", "overall_notes"})},
              {"additionalProperties", false}};
}

TraitBleedReport evaluate_trait_bleed(const SJTItem& item, const Templates& t, provider::Provider& p, int iteration) {
  auto req = request_for(build_trait_bleed_prompt(item.content, t), trait_bleed_schema(), "trait_bleed_report",
                         "sjt:bleed:" + item.id);
  req.sample_index = iteration;
  req.sampling = provider::Sampling{0.0, 1.0, 0.0, 0.0};
  req.context = Json{{"item", item.content.to_payload()}};
  auto report = TraitBleedReport::from_json(p.complete_structured(req).payload);
  SJTItem probe = item;
  probe.content = report.corrected;
  probe.check();
  return report;
}

DebleedResult debleed_loop(SJTItem item, const Templates& t, provider::Provider& p, const DebleedParams& params) {
  if (params.max_iters < 1) fail(ErrorCode::InvalidArgument, "debleed max_iters must be >= 1");
  DebleedResult res;
  res.item = std::move(item);
  res.item.status = ItemStatus::BudgetExhausted;
  for (int k = 0; k < params.max_iters; ++k) {
    TraitBleedReport report;
    try {
      report = evaluate_trait_bleed(res.item, t, p, k);
    } catch (const Error& e) {
      res.item.status = ItemStatus::Draft;
      throw DebleedError(e, res);
    }
    res.item.lineage.push_back(res.item.id + "/bleed-" + std::to_string(k + 1));
    const bool clean = report.clean(params.threshold);
    if (!clean) res.item.content = report.corrected;
    res.reports.push_back(std::move(report));
    if (clean) {
      res.item.status = ItemStatus::Clean;
      break;
    }
  }
  return res;
}

SJTItem paraphrase_options(const SJTItem& item, const Templates& t, provider::Provider& p) {
  text::Vars v;
  Prompt prompt;
  prompt.system_text = t.paraphrase.system_text;
  v["question"] = item.content.question;
  v["answer_options"] = answer_options_text(item.content);
  prompt.user_text = text::render(t.paraphrase.user_template, v, text::Braces::Double);
  Json schema = options_schema();
  schema["properties"].erase("question");
  schema["required"].erase(0);
  auto req = request_for(prompt, schema, "sjt_paraphrase", "sjt:paraphrase:" + item.id);
  Json draft = item.content.to_payload();
  draft.erase("question");
  req.context = Json{{"draft", draft}};
  const auto payload = p.complete_structured(req).payload;
  SJTItem out = item;
  for (Trait tr : kTraits) out.content.options[index(tr)] = payload.at(option_key(tr)).get<std::string>();
  out.lineage.push_back(item.id + "/paraphrase");
  out.check();
  return out;
}

}  // namespace psychoforge::sjt
