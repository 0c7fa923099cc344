#include <map>
#include <set>

#include <gtest/gtest.h>

#include "psychoforge/sjt.hpp"
#include "support.hpp"

using namespace psychoforge;
using namespace psychoforge::sjt;
using testing_support::data_path;
using testing_support::mock_provider;

namespace {

const AttributeDomains& domains() {
  static const AttributeDomains d = AttributeDomains::load(data_path("sjt/attribute_domains.json"));
  return d;
}

const Templates& templates() {
  static const Templates t = Templates::load(data_path("prompts"));
  return t;
}

const std::vector<BaseScenario>& bases() {
  static const auto b = load_base_scenarios(data_path("sjt/base_scenarios.json"));
  return b;
}

SeedAttributes seed_of(std::uint64_t s) {
  Rng rng(s);
  return sample_seeds(domains(), 1, rng, SeedSampling::IidUniform).front();
}

SJTItem draft_item(std::uint64_t s = 1) {
  SJTItem item;
  item.base_id = bases().front().id;
  item.seed = seed_of(s);
  item.content = instantiate_template(bases().front(), item.seed);
  item.id = item_id(item.base_id, item.seed, item.content);
  return item;
}

Json bleed_payload(const Options& corrected, const PerTrait<int>& scores) {
  Json evals;
  for (Trait t : kTraits) {
    evals[std::string(key(t))] = Json{{"score", scores[index(t)]}, {"analysis", "ok"}, {"suggested_correction", nullptr}};
  }
  return Json{{"scenario_summary", "summary"},
              {"trait_evaluations", evals},
              {"corrected_sjt", corrected.to_payload()},
              {"overall_notes", "notes"}};
}

Json scripted(const std::string& match, const std::vector<Json>& payloads) {
  Json responses = Json::array();
  for (const auto& p : payloads) responses.push_back(Json{{"payload", p}});
  return Json{{"rules", Json::array({Json{{"match", match}, {"responses", responses}}})}};
}

PerTrait<int> all(int v) {
  PerTrait<int> s{};
  s.fill(v);
  return s;
}

Json rubric1_payload(int score) {
  Json ta;
  for (Trait t : kTraits) ta[std::string(key(t))] = Json{{"score", score}, {"justification", "j"}, {"overlaps", Json::array()}};
  auto scored = Json{{"score", score}, {"justification", "j"}};
  return Json{{"scenario_realism", scored}, {"trait_alignment", ta}, {"ethical_tension", scored}, {"fairness", scored}};
}

Json rubric2_payload(const SeedAttributes& guess, double confidence = 0.9) {
  Json j;
  for (auto name : kInferredAttributes) {
    j[std::string(name)] = Json{{"value", guess.at(name)}, {"confidence", confidence}, {"justification", "j"}};
  }
  Json traits;
  for (std::size_t i = 0; i < kTraitCount; ++i) {
    traits[std::string(kOptionOrdinals[i])] =
        Json{{"values", Json{{std::string(key(kTraits[i])), 1.0}}}, {"confidence", 0.8}, {"justification", "j"}};
  }
  j["hexaco_traits"] = traits;
  j["rubric_quality"] = Json{{"value", "High"}, {"confidence", 0.7}, {"justification", "j"}};
  return j;
}

RubricTwoReport report_from(const SeedAttributes& guess) { return RubricTwoReport::from_json(rubric2_payload(guess), domains()); }

}  // namespace

TEST(SeedSpace, ShippedCardinality) {
  const std::map<std::string, std::size_t> expected = {
      {"urgency_level", 3}, {"threat_level", 3},           {"ambiguity_level", 3}, {"individuals_involved", 3},
      {"authority_relationships", 3}, {"ethical_considerations", 5}, {"situation_type", 7}, {"time_of_day", 4},
      {"race", 8},          {"gender", 4},                 {"age", 6}};
  std::uint64_t product = 1;
  for (const auto& [name, size] : expected) {
    EXPECT_EQ(domains().at(name).values.size(), size) << name;
    product *= size;
  }
  EXPECT_EQ(product, 6531840u);
  EXPECT_EQ(seed_space_cardinality(domains()), product);
  ASSERT_EQ(domains().attributes.size(), kAttributeNames.size());
  for (std::size_t i = 0; i < kAttributeNames.size(); ++i) EXPECT_EQ(domains().attributes[i].name, kAttributeNames[i]);
}

TEST(SeedSpace, SmallAndEmpty) {
  AttributeDomains one{{AttributeDomain{"urgency_level", "Urgency Level", {"Low", "Medium", "High"}, {}}}};
  EXPECT_EQ(seed_space_cardinality(one), 3u);
  one.attributes.push_back(AttributeDomain{"threat_level", "Threat Level", {}, {}});
  EXPECT_ERROR_CODE((void)seed_space_cardinality(one), ErrorCode::EmptyDomain);
}

TEST(SampleSeeds, BalancedMarginals) {
  Rng rng(20251014);
  const auto seeds = sample_seeds(domains(), 4000, rng, SeedSampling::Balanced);
  ASSERT_EQ(seeds.size(), 4000u);
  for (const auto& dom : domains().attributes) {
    std::map<std::string, std::size_t> counts;
    for (const auto& v : dom.values) counts[v] = 0;
    for (const auto& s : seeds) ++counts.at(s.at(dom.name));
    std::size_t lo = SIZE_MAX, hi = 0;
    for (const auto& [v, c] : counts) {
      lo = std::min(lo, c);
      hi = std::max(hi, c);
    }
    EXPECT_LE(hi - lo, 1u) << dom.name;
  }
  std::map<std::string, std::size_t> urgency;
  for (const auto& s : seeds) ++urgency[s.at("urgency_level")];
  for (const auto& [v, c] : urgency) EXPECT_NEAR(static_cast<double>(c), 4000.0 / 3.0, 1.0);
}

TEST(SampleSeeds, ValidAndDeterministic) {
  for (auto mode : {SeedSampling::IidUniform, SeedSampling::Balanced}) {
    Rng a(5), b(5);
    const auto sa = sample_seeds(domains(), 37, a, mode);
    const auto sb = sample_seeds(domains(), 37, b, mode);
    EXPECT_EQ(sa, sb);
    for (const auto& s : sa) EXPECT_NO_THROW(validate_seed(s, domains()));
    Rng c(5);
    ASSERT_EQ(sample_seeds(domains(), 1, c, mode).size(), 1u);
  }
  EXPECT_EQ(parse_seed_sampling("balanced"), SeedSampling::Balanced);
  EXPECT_EQ(parse_seed_sampling("iid"), SeedSampling::IidUniform);
}

TEST(SeedAttributesTest, ValidationAndRoundTrip) {
  auto s = seed_of(3);
  EXPECT_EQ(SeedAttributes::from_json(s.to_json()), s);
  s.set("time_of_day", "Dusk");
  EXPECT_ERROR_CODE(validate_seed(s, domains()), ErrorCode::InvalidArgument);
  EXPECT_EQ(domains().at("gender").canonical("non-binary"), std::optional<std::string>("Non Binary"));
  EXPECT_EQ(domains().at("race").canonical("Hispanic"), std::optional<std::string>("Hispanic/Latino"));
  EXPECT_EQ(domains().at("time_of_day").canonical("unknown"), std::optional<std::string>("Unknown"));
  EXPECT_FALSE(domains().at("time_of_day").canonical("Dusk").has_value());
}

TEST(Instantiate, Placeholders) {
  auto seed = seed_of(2);
  seed.set("time_of_day", "Evening");
  EXPECT_NE(instantiate_text("During the [time_of_day] shift", seed).find("Evening"), std::string::npos);
  EXPECT_ERROR_CODE((void)instantiate_text("A [suspect1_height] figure", seed), ErrorCode::UnknownPlaceholder);
  EXPECT_EQ(instantiate_text("No placeholders [here, really] 1 [2]", seed), "No placeholders [here, really] 1 [2]");
  const auto race = instantiate_text("[suspect1_race]", seed);
  EXPECT_EQ(race, seed.at("race"));
  for (const auto& base : bases()) {
    const auto o = instantiate_template(base, seed);
    EXPECT_FALSE(has_placeholder(o.question));
    for (const auto& opt : o.options) EXPECT_FALSE(has_placeholder(opt));
  }
}

TEST(Instantiate, BaseMissingOption) {
  auto b = bases().front();
  b.options[index(Trait::O)].clear();
  EXPECT_ERROR_CODE(check_base(b), ErrorCode::MissingField);
  EXPECT_ERROR_CODE((void)build_variant_prompt(b, seed_of(1), templates()), ErrorCode::MissingField);
}

TEST(VariantPrompt, ListsAllAttributesDeterministically) {
  auto seed = seed_of(4);
  seed.set("race", "Unknown");
  seed.set("gender", "Unknown");
  seed.set("age", "Unknown");
  const auto a = build_variant_prompt(bases()[1], seed, templates());
  const auto b = build_variant_prompt(bases()[1], seed, templates());
  EXPECT_EQ(a.user_text, b.user_text);
  EXPECT_EQ(a.system_text, b.system_text);
  for (const auto& [name, value] : seed.values) EXPECT_NE(a.user_text.find(value), std::string::npos) << name;
  EXPECT_EQ(a.user_text.find("{{"), std::string::npos);
}

TEST(GenerateSjt, FixedPayload) {
  const auto item = draft_item();
  auto p = mock_provider(scripted("sjt:create:*", {item.content.to_payload()}));
  const auto got = generate_sjt(bases().front(), item.seed, templates(), *p, "00001");
  EXPECT_TRUE(got.lineage.empty());
  EXPECT_EQ(got.content, item.content);
  EXPECT_EQ(got.id, item.id);
  EXPECT_EQ(got.id.rfind("sjt-", 0), 0u);
  EXPECT_EQ(got.id.size(), 4u + 16u);
}

TEST(GenerateSjt, MissingOptionRetriesThenFails) {
  auto payload = draft_item().content.to_payload();
  payload.erase("openness_option");
  auto p = mock_provider(scripted("sjt:create:*", {payload}));
  EXPECT_ERROR_CODE((void)generate_sjt(bases().front(), seed_of(1), templates(), *p, "k"), ErrorCode::SchemaInvalid);
  EXPECT_EQ(p->network_calls(), 4u);
}

TEST(TraitBleed, AllFivesKeepsInput) {
  const auto item = draft_item();
  auto p = mock_provider(scripted("sjt:bleed:*", {bleed_payload(item.content, all(5))}));
  const auto rep = evaluate_trait_bleed(item, templates(), *p);
  EXPECT_TRUE(rep.clean(5));
  EXPECT_EQ(rep.corrected, item.content);
}

TEST(TraitBleed, SingleOptionCorrection) {
  const auto item = draft_item();
  auto corrected = item.content;
  corrected.options[index(Trait::A)] = "You calmly defer to your partner's plan and keep the peace.";
  auto scores = all(5);
  scores[index(Trait::A)] = 3;
  auto p = mock_provider(scripted("sjt:bleed:*", {bleed_payload(corrected, scores)}));
  const auto rep = evaluate_trait_bleed(item, templates(), *p);
  EXPECT_FALSE(rep.clean(5));
  EXPECT_EQ(rep.corrected.question, item.content.question);
  for (Trait t : kTraits) {
    EXPECT_EQ(rep.corrected.options[index(t)] == item.content.options[index(t)], t != Trait::A);
  }
}

TEST(TraitBleed, ZeroScoreIsSchemaError) {
  const auto item = draft_item();
  auto scores = all(5);
  scores[0] = 0;
  auto p = mock_provider(scripted("sjt:bleed:*", {bleed_payload(item.content, scores)}));
  EXPECT_ERROR_CODE((void)evaluate_trait_bleed(item, templates(), *p), ErrorCode::SchemaInvalid);
}

TEST(Debleed, CleanFirstPass) {
  const auto item = draft_item();
  auto p = mock_provider(scripted("sjt:bleed:*", {bleed_payload(item.content, all(5))}));
  const auto res = debleed_loop(item, templates(), *p);
  EXPECT_EQ(res.reports.size(), 1u);
  EXPECT_EQ(res.item.lineage.size(), 1u);
  EXPECT_EQ(res.item.status, ItemStatus::Clean);
}

TEST(Debleed, FourThenFive) {
  const auto item = draft_item();
  auto p = mock_provider(scripted("sjt:bleed:*", {bleed_payload(item.content, all(4)), bleed_payload(item.content, all(5))}));
  const auto res = debleed_loop(item, templates(), *p);
  EXPECT_EQ(res.reports.size(), 2u);
  EXPECT_EQ(res.item.status, ItemStatus::Clean);
}

TEST(Debleed, PerpetualFourExhaustsBudget) {
  const auto item = draft_item();
  auto p = mock_provider(scripted("sjt:bleed:*", {bleed_payload(item.content, all(4))}));
  const auto res = debleed_loop(item, templates(), *p, DebleedParams{3, 5});
  EXPECT_EQ(res.reports.size(), 3u);
  EXPECT_EQ(res.item.lineage.size(), 3u);
  EXPECT_EQ(res.item.status, ItemStatus::BudgetExhausted);
  EXPECT_NO_THROW(res.item.check());
}

TEST(Debleed, LineageMonotoneAndBounded) {
  const auto item = draft_item();
  for (int max_iters = 1; max_iters <= 5; ++max_iters) {
    auto p = mock_provider(scripted("sjt:bleed:*", {bleed_payload(item.content, all(4))}));
    const auto res = debleed_loop(item, templates(), *p, DebleedParams{max_iters, 5});
    EXPECT_EQ(static_cast<int>(res.item.lineage.size()), max_iters);
  }
}

TEST(Debleed, ProviderFailureCarriesLineage) {
  const auto item = draft_item();
  Json script = {{"rules", {{{"match", "sjt:bleed:*"},
                             {"responses", {{{"payload", bleed_payload(item.content, all(4))}}, {{"error", 401}}}}}}}};
  auto p = mock_provider(script);
  try {
    (void)debleed_loop(item, templates(), *p);
    FAIL() << "expected DebleedError";
  } catch (const DebleedError& e) {
    EXPECT_EQ(e.partial().reports.size(), 1u);
    EXPECT_EQ(e.partial().item.lineage.size(), 1u);
  }
}

TEST(Rubric1, AllFivesAndFairnessKept) {
  const auto item = draft_item();
  auto p = mock_provider(scripted("sjt:rubric1:*", {rubric1_payload(5)}));
  const auto r = judge_rubric1(item, templates(), *p);
  EXPECT_EQ(r.scenario_realism.score, 5);
  auto low = rubric1_payload(5);
  low["fairness"]["score"] = 1;
  auto q = mock_provider(scripted("sjt:rubric1:*", {low}));
  EXPECT_EQ(judge_rubric1(item, templates(), *q).fairness.score, 1);
}

TEST(Rubric1, SelfOverlapRejected) {
  auto payload = rubric1_payload(4);
  payload["trait_alignment"]["openness"]["overlaps"] = Json::array({"openness"});
  EXPECT_ERROR_CODE((void)RubricOneReport::from_json(payload), ErrorCode::InvariantViolation);
  payload["trait_alignment"]["openness"]["overlaps"] = Json::array({"Conscientiousness"});
  const auto r = RubricOneReport::from_json(payload);
  EXPECT_EQ(r.trait_alignment[index(Trait::O)].overlaps, std::vector<Trait>{Trait::C});
}

TEST(Rubric2, ParsesAndNormalizes) {
  const auto item = draft_item();
  auto guess = item.seed;
  auto payload = rubric2_payload(guess);
  payload["gender"]["value"] = "Non-Binary";
  auto p = mock_provider(scripted("sjt:rubric2:*", {payload}));
  const auto r = judge_rubric2(item, domains(), templates(), *p);
  EXPECT_EQ(r.attribute("gender").value, "Non Binary");
  EXPECT_EQ(r.attribute("time_of_day").value, item.seed.at("time_of_day"));
  EXPECT_EQ(r.options[3].primary(), Trait::A);
}

TEST(Rubric2, ConfidenceOutOfRangeIsSchemaError) {
  const auto item = draft_item();
  auto p = mock_provider(scripted("sjt:rubric2:*", {rubric2_payload(item.seed, 1.5)}));
  EXPECT_ERROR_CODE((void)judge_rubric2(item, domains(), templates(), *p), ErrorCode::SchemaInvalid);
}

TEST(Rubric2, MultiTraitWeightsAccepted) {
  auto payload = rubric2_payload(seed_of(1));
  payload["hexaco_traits"]["first_option"]["values"] = Json{{"honesty_humility", 0.7}, {"conscientiousness", 0.3}};
  const auto r = RubricTwoReport::from_json(payload, domains());
  ASSERT_EQ(r.options[0].weights.size(), 2u);
  EXPECT_EQ(r.options[0].primary(), Trait::H);
  payload["hexaco_traits"]["first_option"]["values"] = Json{{"honesty_humility", 0.7}, {"openness", 0.6}};
  EXPECT_ERROR_CODE((void)RubricTwoReport::from_json(payload, domains()), ErrorCode::SchemaInvalid);
  payload["hexaco_traits"]["first_option"]["values"] = Json{{"stubbornness", 0.5}};
  EXPECT_ERROR_CODE((void)RubricTwoReport::from_json(payload, domains()), ErrorCode::SchemaInvalid);
}

TEST(Rubric2, PromptHidesSeedAndTraitMapping) {
  auto a = draft_item(1);
  auto b = a;
  b.seed = seed_of(99);
  const auto pa = build_rubric2_prompt(a.content, templates());
  const auto pb = build_rubric2_prompt(b.content, templates());
  EXPECT_EQ(pa.user_text, pb.user_text);
  EXPECT_EQ(pa.system_text, pb.system_text);
  for (Trait t : kTraits) EXPECT_EQ(pa.user_text.find(option_key(t)), std::string::npos);
  for (const auto& [name, value] : a.seed.values) {
    EXPECT_EQ(pa.user_text.find(domains().at(name).display + ": " + value), std::string::npos);
    EXPECT_EQ(pa.user_text.find(name + "=" + value), std::string::npos);
  }
  const auto opts = answer_options_text(a.content);
  for (Trait t : kTraits) EXPECT_EQ(opts.find(display_name(t)), std::string::npos);
  EXPECT_EQ(opts.rfind("1. ", 0), 0u);
}

TEST(Agreement, PerfectRecovery) {
  std::vector<SeedAttributes> truths;
  std::vector<RubricTwoReport> inferred;
  Rng rng(12);
  const auto seeds = sample_seeds(domains(), 200, rng, SeedSampling::Balanced);
  for (const auto& s : seeds) {
    truths.push_back(s);
    inferred.push_back(report_from(s));
  }
  const auto rows = seed_recovery_agreement(truths, inferred, domains());
  ASSERT_EQ(rows.size(), kInferredAttributes.size());
  for (const auto& r : rows) {
    ASSERT_TRUE(r.kappa.has_value()) << r.attribute;
    EXPECT_DOUBLE_EQ(*r.kappa, 1.0) << r.attribute;
  }
  EXPECT_EQ(rows[6].attribute, "Time of Day");
  const auto md = agreement_table_markdown(rows);
  EXPECT_NE(md.find("| Time of Day | 1.000 |"), std::string::npos);
  EXPECT_DOUBLE_EQ(*trait_mapping_agreement(inferred).kappa, 1.0);
  EXPECT_ERROR_CODE((void)seed_recovery_agreement(truths, {}, domains()), ErrorCode::LengthMismatch);
}

TEST(Agreement, PermutationNullNearZero) {
  Rng rng(2718);
  const auto truths = sample_seeds(domains(), 1000, rng, SeedSampling::IidUniform);
  auto shuffled = truths;
  rng.shuffle(shuffled);
  std::vector<RubricTwoReport> inferred;
  for (const auto& s : shuffled) inferred.push_back(report_from(s));
  for (const auto& r : seed_recovery_agreement(truths, inferred, domains())) {
    ASSERT_TRUE(r.kappa.has_value());
    EXPECT_GE(*r.kappa, -0.05) << r.attribute;
    EXPECT_LE(*r.kappa, 0.05) << r.attribute;
  }
}

TEST(SjtItemTest, InvariantsAndRoundTrip) {
  auto item = draft_item();
  EXPECT_NO_THROW(item.check());
  const auto back = SJTItem::from_json(item.to_json());
  EXPECT_EQ(back.to_json().dump(), item.to_json().dump());
  item.content.options[index(Trait::X)] = "Wait for [backup_unit]";
  EXPECT_ERROR_CODE(item.check(), ErrorCode::InvariantViolation);
  item.content.options[index(Trait::X)] = "  ";
  EXPECT_ERROR_CODE(item.check(), ErrorCode::InvariantViolation);
}

TEST(SjtItemTest, ShippedSampleBankLoads) {
  const auto bank = load_bank(data_path("sjt/sample_bank.jsonl"));
  EXPECT_GE(bank.size(), 20u);
  std::set<std::string> ids;
  for (const auto& it : bank) {
    EXPECT_NO_THROW(it.check());
    EXPECT_NO_THROW(validate_seed(it.seed, domains()));
    EXPECT_TRUE(ids.insert(it.id).second);
  }
}
