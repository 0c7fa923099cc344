#include <algorithm>
#include <fstream>
#include <set>

#include <gtest/gtest.h>

#include "psychoforge/demography.hpp"
#include "psychoforge/parallel.hpp"
#include "support.hpp"

using namespace psychoforge;
using namespace psychoforge::demography;
using testing_support::data_path;

namespace {

const RosterConfig& shipped() {
  static const RosterConfig cfg = RosterConfig::load(data_path("demography/officers.json"));
  return cfg;
}

std::vector<std::string> labels_of(const CategoricalDistribution& d) { return d.labels; }

}  // namespace

TEST(Categorical, SingleLabelAlwaysDrawn) {
  const auto d = CategoricalDistribution::from_weights({"only"}, {3.0});
  Rng rng(1);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(sample_categorical(d, rng), "only");
}

TEST(Categorical, GenderMarginalConverges) {
  CategoricalDistribution d{{"Male", "Female"}, {0.86082, 0.13918}};
  d.validate();
  Rng rng(20251014);
  std::size_t male = 0;
  const std::size_t n = 100000;
  for (std::size_t i = 0; i < n; ++i) male += sample_categorical(d, rng) == "Male" ? 1 : 0;
  EXPECT_NEAR(static_cast<double>(male) / n, 0.86082, 0.01);
}

TEST(Categorical, InvalidDistributions) {
  EXPECT_ERROR_CODE((CategoricalDistribution{{"a", "b"}, {0.5, 0.4}}.validate()), ErrorCode::InvalidDistribution);
  EXPECT_ERROR_CODE((CategoricalDistribution{{"a", "b"}, {1.2, -0.2}}.validate()), ErrorCode::InvalidDistribution);
  EXPECT_ERROR_CODE((CategoricalDistribution{{"a", "a"}, {0.5, 0.5}}.validate()), ErrorCode::InvalidDistribution);
  EXPECT_ERROR_CODE((void)CategoricalDistribution::from_weights({"a"}, {0.0}), ErrorCode::InvalidDistribution);
  Rng rng(1);
  CategoricalDistribution bad{{"a", "b"}, {0.6, 0.3}};
  EXPECT_ERROR_CODE((void)sample_categorical(bad, rng), ErrorCode::InvalidDistribution);
}

TEST(AgeGroups, HalfOpenBins) {
  EXPECT_EQ(age_to_group(17), AgeGroup::Juvenile);
  EXPECT_EQ(age_to_group(18), AgeGroup::YoungAdult);
  EXPECT_EQ(age_to_group(24), AgeGroup::YoungAdult);
  EXPECT_EQ(age_to_group(25), AgeGroup::Adult);
  EXPECT_EQ(age_to_group(39), AgeGroup::Adult);
  EXPECT_EQ(age_to_group(40), AgeGroup::MiddleAged);
  EXPECT_EQ(age_to_group(60), AgeGroup::MiddleAged);
  EXPECT_EQ(age_to_group(61), AgeGroup::Senior);
  EXPECT_EQ(age_to_group(0), AgeGroup::Juvenile);
  EXPECT_ERROR_CODE((void)age_to_group(-1), ErrorCode::NegativeAge);
  for (int a = 0; a < 130; ++a) EXPECT_NE(age_to_group(a), AgeGroup::Unknown);
  EXPECT_EQ(parse_age_group("Middle Aged"), AgeGroup::MiddleAged);
  EXPECT_EQ(to_string(AgeGroup::YoungAdult), "Young Adult");
}

TEST(Roster, EmptyAndDeterministic) {
  EXPECT_TRUE(generate_roster(shipped(), 0, 1).empty());
  const auto a = generate_roster(shipped(), 200, 42);
  const auto b = generate_roster(shipped(), 200, 42);
  ASSERT_EQ(a.size(), 200u);
  EXPECT_EQ(a, b);
  std::string ja, jb;
  for (const auto& p : a) ja += p.to_json().dump() + "\n";
  for (const auto& p : b) jb += p.to_json().dump() + "\n";
  EXPECT_EQ(ja, jb);
  EXPECT_NE(generate_roster(shipped(), 200, 43), a);
}

TEST(Roster, IndependentOfWorkerCount) {
  // Parallel rosters under split seeds equal the sequential build.
  std::vector<std::vector<DemographicProfile>> seq(8), par(8);
  for (std::size_t i = 0; i < 8; ++i) seq[i] = generate_roster(shipped(), 25, derive_seed(7, std::to_string(i)));
  parallel_for(8, 8, [&](std::size_t i) { par[i] = generate_roster(shipped(), 25, derive_seed(7, std::to_string(i))); });
  EXPECT_EQ(seq, par);
}

TEST(Roster, ProfilesRespectConfiguredDomains) {
  const auto& cfg = shipped();
  const auto roster = generate_roster(cfg, 3000, 5);
  std::set<std::string> ids;
  for (const auto& p : roster) {
    EXPECT_TRUE(ids.insert(p.id).second);
    EXPECT_GE(p.age, kMinOfficerAge);
    EXPECT_LE(p.age, kMaxOfficerAge);
    EXPECT_GT(cfg.location.prob(p.location), 0.0);
    EXPECT_GT(cfg.sex.prob(p.sex), 0.0);
    EXPECT_GT(cfg.ethnic_background.prob(p.ethnic_background), 0.0);
    EXPECT_GT(cfg.education_level.prob(p.education_level), 0.0);
    EXPECT_GT(cfg.marital_status.prob(p.marital_status), 0.0);
    EXPECT_TRUE(cfg.names.has(p.sex, p.ethnic_background));
    EXPECT_FALSE(p.given_name.empty());
    EXPECT_FALSE(p.surname.empty());
    const bool with_degree = std::find(cfg.bachelors_levels.begin(), cfg.bachelors_levels.end(), p.education_level) !=
                             cfg.bachelors_levels.end();
    if (with_degree) {
      EXPECT_GT(cfg.bachelors_field.prob(p.bachelors_field), 0.0);
    } else {
      EXPECT_EQ(p.bachelors_field, cfg.no_bachelors_label);
    }
    EXPECT_EQ(p.city() + ", " + p.state(), p.location);
    EXPECT_EQ(DemographicProfile::from_json(p.to_json()), p);
  }
}

TEST(Roster, AdultAndMiddleAgedShare) {
  const auto roster = generate_roster(shipped(), 8500, 20251014);
  std::size_t core = 0;
  for (const auto& p : roster) {
    const auto g = p.age_group();
    core += (g == AgeGroup::Adult || g == AgeGroup::MiddleAged) ? 1 : 0;
  }
  EXPECT_NEAR(100.0 * static_cast<double>(core) / 8500.0, 39.376 + 39.082, 2.0);
}

TEST(Roster, MarginalsConvergeAtScale) {
  const auto roster = generate_roster(shipped(), 100000, 99);
  const auto sex = empirical_distribution(roster, "sex");
  EXPECT_EQ(sex.total(), roster.size());
  for (const auto& label : labels_of(shipped().sex)) {
    const double got = static_cast<double>(sex.counts.count(label) ? sex.counts.at(label) : 0) / roster.size();
    EXPECT_NEAR(got, shipped().sex.prob(label), 0.01) << label;
  }
  const auto edu = empirical_distribution(roster, "education_level");
  for (const auto& label : labels_of(shipped().education_level)) {
    EXPECT_NEAR(static_cast<double>(edu.counts.at(label)) / roster.size(), shipped().education_level.prob(label), 0.01);
  }
}

TEST(Roster, MissingNameTableIsNamed) {
  testing_support::TempDir dir;
  {
    std::ofstream names(dir / "names.tsv");
    names << "sex\tethnicity\tgiven_name\tsurname\tweight\nMale\tWhite\tJohn\tDoe\t1\n";
  }
  Json cfg = {{"names", "names.tsv"},
              {"fields",
               {{"location", {{"weights", {{"Austin, TX", 1}}}}},
                {"sex", {{"probs", {{"Female", 1.0}}}}},
                {"ethnic_background", {{"weights", {{"White", 1}}}}},
                {"age_group", {{"weights", {{"Adult", 1}}}}},
                {"education_level", {{"weights", {{"Some College", 1}}}}},
                {"bachelors_field", {{"weights", {{"History", 1}}}}},
                {"marital_status", {{"weights", {{"Single", 1}}}}}}},
              {"age_ranges", {{"Adult", {25, 39}}}}};
  const auto rc = RosterConfig::from_json(cfg, dir.path());
  try {
    (void)generate_roster(rc, 1, 1);
    FAIL() << "expected MissingNameTable";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingNameTable);
    EXPECT_NE(std::string(e.what()).find("Female"), std::string::npos);
  }
}

TEST(EmpiricalDistribution, CountsAndUnknownField) {
  DemographicProfile p;
  p.sex = "Male";
  p.age = 30;
  p.location = "Austin, TX";
  const std::vector<DemographicProfile> three(3, p);
  const auto c = empirical_distribution(three, "sex");
  EXPECT_EQ(c.counts.size(), 1u);
  EXPECT_EQ(c.counts.at("Male"), 3u);
  EXPECT_EQ(empirical_distribution(three, "age_group").counts.at("Adult"), 3u);
  EXPECT_EQ(empirical_distribution(three, "state").counts.at("TX"), 3u);
  EXPECT_ERROR_CODE((void)empirical_distribution(three, "height"), ErrorCode::UnknownField);
}
