#include <algorithm>
#include <set>

#include <gtest/gtest.h>

#include "psychoforge/battery.hpp"
#include "support.hpp"

using namespace psychoforge;
using namespace psychoforge::battery;
using testing_support::data_path;
using testing_support::mock_provider;
using testing_support::TempDir;

namespace {

const Inventory& inventory() {
  static const Inventory inv = Inventory::load_tsv(data_path("inventory/placeholder_hexaco100.tsv"));
  return inv;
}

const Templates& templates() {
  static const Templates t = Templates::load(data_path("prompts"));
  return t;
}

const std::vector<sjt::SJTItem>& bank() {
  static const auto b = sjt::load_bank(data_path("sjt/sample_bank.jsonl"));
  return b;
}

persona::PersonaRecord record(const std::string& id = "officer-0001") {
  persona::PersonaRecord r;
  r.id = id;
  r.demographics.id = id;
  r.demographics.given_name = "Dana";
  r.demographics.surname = "Reyes";
  r.demographics.age = 38;
  r.demographics.sex = "Female";
  r.demographics.location = "Austin, TX";
  r.demographics.education_level = "Bachelor's Degree";
  r.demographics.bachelors_field = "Criminal Justice";
  r.demographics.ethnic_background = "Mexican";
  r.demographics.marital_status = "Married";
  r.archetype_name = "The Guardian";
  r.memoir_title = "Night Shift";
  for (std::size_t i = 0; i < r.sections.size(); ++i) r.sections[i] = "Section text " + std::to_string(i) + " for " + id;
  r.presenting_problems = {"Sleep loss", "Irritability", "Hypervigilance"};
  r.summary = "A steady officer.";
  return r;
}

Json likert_script(const std::string& answer) {
  return Json{{"rules", Json::array({Json{{"match", "administer:hexaco:*"},
                                          {"responses", Json::array({Json{{"payload", Json{{"answer", answer}}}}})}}})}};
}

Json choice_script(int label) {
  return Json{{"rules", Json::array({Json{{"match", "administer:sjt:*"},
                                          {"responses", Json::array({Json{{"payload", Json{{"choice", label}}}}})}}})}};
}

Json content_script() {
  return Json{{"rules", Json::array({Json{{"match", "administer:sjt:*"},
                                          {"generator", "choose_by_content"},
                                          {"params", Json{{"salt", "battery-test"}}}}})}};
}

Controls controls(Control c, std::uint64_t seed = 11) { return Controls{c, seed, fixed_clock("2025-10-14T00:00:00Z")}; }

std::vector<Trait> chosen(const BatterySession& s) {
  std::vector<Trait> out;
  for (const auto& r : s.sjt) out.push_back(*r.trait);
  return out;
}

}  // namespace

TEST(InventoryTest, ShippedPlaceholderIsValid) {
  const auto& inv = inventory();
  EXPECT_NO_THROW(inv.check());
  ASSERT_EQ(inv.items.size(), kInventorySize);
  PerTrait<int> per{};
  int interstitial = 0;
  for (std::size_t i = 0; i < inv.items.size(); ++i) {
    EXPECT_EQ(inv.items[i].item_id, static_cast<int>(i) + 1);
    if (inv.items[i].domain) {
      ++per[index(*inv.items[i].domain)];
    } else {
      ++interstitial;
    }
  }
  for (int c : per) EXPECT_EQ(c, 16);
  EXPECT_EQ(interstitial, 4);
}

TEST(InventoryTest, CheckRejectsBadShape) {
  auto inv = inventory();
  inv.items.pop_back();
  EXPECT_ANY_THROW(inv.check());
  inv = inventory();
  inv.items[0].item_id = 2;
  EXPECT_ANY_THROW(inv.check());
}

TEST(Likert, LabelMap) {
  for (std::size_t i = 0; i < kLikertLabels.size(); ++i) EXPECT_EQ(likert_value(kLikertLabels[i]), static_cast<int>(i) + 1);
  EXPECT_ERROR_CODE((void)likert_value("Somewhat Agree"), ErrorCode::InvalidArgument);
}

TEST(Presentation, Controls) {
  const auto fixed = present("sjt-x", Control::Fixed, 1, "p");
  const auto inv = present("sjt-x", Control::Invert, 1, "p");
  for (std::size_t k = 0; k < kTraitCount; ++k) {
    EXPECT_EQ(fixed.displayed_order[k], kTraits[k]);
    EXPECT_EQ(inv.displayed_order[k], kTraits[kTraitCount - 1 - k]);
  }
  std::set<std::vector<Trait>> seen;
  for (int i = 0; i < 200; ++i) {
    const auto s = present("sjt-" + std::to_string(i), Control::Shuffle, 7, "p");
    EXPECT_TRUE(s.is_bijection());
    for (int label = 1; label <= 6; ++label) EXPECT_EQ(s.trait_to_label(s.label_to_trait(label)), label);
    seen.insert(std::vector<Trait>(s.displayed_order.begin(), s.displayed_order.end()));
    EXPECT_EQ(s.displayed_order, present("sjt-" + std::to_string(i), Control::Shuffle, 7, "p").displayed_order);
  }
  EXPECT_GT(seen.size(), 100u);
  EXPECT_ANY_THROW((void)fixed.label_to_trait(7));
}

TEST(AdministerHexaco, ConstantAnswers) {
  auto p = mock_provider(likert_script("Neutral"));
  const auto s = administer_hexaco(record(), inventory(), templates(), *p, controls(Control::Fixed));
  ASSERT_EQ(s.likert.size(), 100u);
  EXPECT_TRUE(s.complete);
  EXPECT_EQ(s.cursor, 100u);
  for (const auto& r : s.likert) EXPECT_EQ(r.value, 3);
  EXPECT_EQ(s.conditioning, kConditioningId);
  EXPECT_EQ(s.started_at, "2025-10-14T00:00:00Z");
}

TEST(AdministerHexaco, ScaleInversionKeepsLabelMeaning) {
  auto p = mock_provider(likert_script("Strongly Agree"));
  const auto s = administer_hexaco(record(), inventory(), templates(), *p, controls(Control::Invert));
  for (const auto& r : s.likert) EXPECT_EQ(r.value, 5);
}

TEST(AdministerHexaco, ShuffleDeterministicPermutation) {
  auto run = [](std::uint64_t seed) {
    auto p = mock_provider(likert_script("Agree"));
    return administer_hexaco(record(), inventory(), templates(), *p, controls(Control::Shuffle, seed));
  };
  const auto a = run(3), b = run(3), c = run(4);
  std::vector<int> ia, ib, ic;
  for (const auto& r : a.likert) ia.push_back(r.item_id);
  for (const auto& r : b.likert) ib.push_back(r.item_id);
  for (const auto& r : c.likert) ic.push_back(r.item_id);
  EXPECT_EQ(ia, ib);
  EXPECT_NE(ia, ic);
  auto sorted = ia;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 100; ++i) EXPECT_EQ(sorted[i], i + 1);
}

TEST(AdministerHexaco, ProviderFailureKeepsPartial) {
  Json script = {{"rules", Json::array({Json{{"match", "administer:hexaco:*:7"}, {"responses", Json::array({Json{{"error", 400}}})}},
                                        Json{{"match", "administer:hexaco:*"},
                                             {"responses", Json::array({Json{{"payload", Json{{"answer", "Agree"}}}}})}}})}};
  auto p = mock_provider(script);
  try {
    (void)administer_hexaco(record(), inventory(), templates(), *p, controls(Control::Fixed));
    FAIL();
  } catch (const AdministerError& e) {
    EXPECT_EQ(e.item_id(), "7");
    EXPECT_EQ(e.partial().cursor, 6u);
    EXPECT_FALSE(e.partial().complete);
    auto q = mock_provider(likert_script("Agree"));
    const auto resumed = administer_hexaco(record(), inventory(), templates(), *q, controls(Control::Fixed), &e.partial());
    EXPECT_EQ(resumed.likert.size(), 100u);
    EXPECT_EQ(q->network_calls(), 94u);
  }
}

TEST(AdministerSjt, PositionKeyedPicksFollowPresentation) {
  auto p = mock_provider(choice_script(1));
  const auto fixed = administer_sjt(record(), bank(), "sha256:test", templates(), *p, controls(Control::Fixed));
  for (Trait t : chosen(fixed)) EXPECT_EQ(t, Trait::H);
  auto q = mock_provider(choice_script(1));
  const auto invert = administer_sjt(record(), bank(), "sha256:test", templates(), *q, controls(Control::Invert));
  for (Trait t : chosen(invert)) EXPECT_EQ(t, Trait::O);
  auto r = mock_provider(choice_script(1));
  const auto shuffled = administer_sjt(record(), bank(), "sha256:test", templates(), *r, controls(Control::Shuffle));
  ASSERT_EQ(shuffled.presentation.size(), bank().size());
  for (std::size_t i = 0; i < bank().size(); ++i) {
    EXPECT_TRUE(shuffled.presentation[i].is_bijection());
    EXPECT_EQ(*shuffled.sjt[i].trait, shuffled.presentation[i].displayed_order[0]);
    EXPECT_EQ(shuffled.sjt[i].label, 1);
  }
  EXPECT_EQ(shuffled.bank_id, "sha256:test");
}

TEST(AdministerSjt, ContentKeyedChoicesIgnorePosition) {
  auto p = mock_provider(content_script());
  const auto base = chosen(administer_sjt(record(), bank(), "b", templates(), *p, controls(Control::Fixed)));
  auto q = mock_provider(content_script());
  EXPECT_EQ(chosen(administer_sjt(record(), bank(), "b", templates(), *q, controls(Control::Invert))), base);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto r = mock_provider(content_script());
    EXPECT_EQ(chosen(administer_sjt(record(), bank(), "b", templates(), *r, controls(Control::Shuffle, seed))), base);
  }
}

TEST(AdministerSjt, SchemaFailuresBecomeUnanswered) {
  const auto& items = bank();
  Json script = {{"rules", Json::array({Json{{"match", "administer:sjt:*:" + items[2].id},
                                             {"responses", Json::array({Json{{"payload", Json{{"choice", 9}}}}})}},
                                        Json{{"match", "administer:sjt:*"},
                                             {"responses", Json::array({Json{{"payload", Json{{"choice", 2}}}}})}}})}};
  auto p = mock_provider(script);
  const auto s = administer_sjt(record(), items, "b", templates(), *p, controls(Control::Fixed));
  ASSERT_EQ(s.sjt.size(), items.size());
  EXPECT_FALSE(s.sjt[2].answered());
  EXPECT_FALSE(s.sjt[2].label.has_value());
  EXPECT_TRUE(s.sjt[1].answered());
  EXPECT_EQ(*s.sjt[1].trait, Trait::E);
}

TEST(AdministerSjt, CachedRerunMakesNoCalls) {
  provider::ProviderConfig cfg;
  cfg.cache_enabled = true;
  auto cache = std::make_shared<provider::ResponseCache>();
  provider::Provider first(cfg, std::make_shared<provider::MockBackend>(content_script()), cache);
  const auto a = administer_sjt(record(), bank(), "b", templates(), first, controls(Control::Shuffle));
  EXPECT_EQ(first.network_calls(), bank().size());
  provider::Provider second(cfg, std::make_shared<provider::MockBackend>(content_script()), cache);
  const auto b = administer_sjt(record(), bank(), "b", templates(), second, controls(Control::Shuffle));
  EXPECT_EQ(second.network_calls(), 0u);
  EXPECT_EQ(a.to_json().dump(), b.to_json().dump());
}

TEST(AdministerSjt, ResumeMismatchRejected) {
  auto p = mock_provider(choice_script(1));
  auto s = administer_sjt(record(), bank(), "b", templates(), *p, controls(Control::Fixed));
  EXPECT_ERROR_CODE((void)administer_sjt(record(), bank(), "b", templates(), *p, controls(Control::Invert), &s),
                    ErrorCode::InvalidArgument);
  EXPECT_ERROR_CODE((void)administer_sjt(record("officer-0002"), bank(), "b", templates(), *p, controls(Control::Fixed), &s),
                    ErrorCode::InvalidArgument);
}

TEST(Sessions, JsonRoundTripAndFile) {
  auto p = mock_provider(content_script());
  const auto s = administer_sjt(record(), bank(), "b", templates(), *p, controls(Control::Shuffle));
  auto q = mock_provider(likert_script("Disagree"));
  const auto h = administer_hexaco(record(), inventory(), templates(), *q, controls(Control::Shuffle));
  EXPECT_EQ(BatterySession::from_json(s.to_json()).to_json(), s.to_json());
  TempDir dir;
  save_sessions(dir / "sessions.jsonl", {h, s});
  const auto back = load_sessions(dir / "sessions.jsonl");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].to_json(), h.to_json());
  EXPECT_EQ(back[1].instrument, Instrument::SjtSet);
}

TEST(PersonaRendering, LabeledSections) {
  const auto text = render_persona(record());
  EXPECT_NE(text.find("Dana Reyes"), std::string::npos);
  EXPECT_NE(text.find("Memoir Narrative"), std::string::npos);
  EXPECT_NE(text.find("Sleep loss"), std::string::npos);
  EXPECT_LT(text.find("Section text 0"), text.find("Section text 1"));
  EXPECT_EQ(text, render_persona(record()));
}

TEST(Clock, Iso8601) {
  EXPECT_EQ(iso8601_utc(0), "1970-01-01T00:00:00Z");
  EXPECT_EQ(iso8601_utc(1760400000), "2025-10-14T00:00:00Z");
}
