#pragma once

// Configurable chained categorical sampler for officer rosters.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "psychoforge/jsonl.hpp"
#include "psychoforge/metrics.hpp"
#include "psychoforge/rng.hpp"

namespace psychoforge::demography {

struct CategoricalDistribution {
  std::vector<std::string> labels;
  std::vector<double> probs;

  /// Throws InvalidDistribution unless probs sum to 1 within 1e-9, are
  /// non-negative, and labels are unique.
  void validate() const;
  /// Normalizes non-negative weights into probabilities.
  [[nodiscard]] static CategoricalDistribution from_weights(std::vector<std::string> labels,
                                                            const std::vector<double>& weights);
  [[nodiscard]] double prob(std::string_view label) const;
};

/// Inverse-CDF draw over the stated label order; consumes one uniform.
[[nodiscard]] const std::string& sample_categorical(const CategoricalDistribution& dist, Rng& rng);

enum class AgeGroup { Juvenile, YoungAdult, Adult, MiddleAged, Senior, Unknown };

[[nodiscard]] std::string_view to_string(AgeGroup g) noexcept;
[[nodiscard]] std::optional<AgeGroup> parse_age_group(std::string_view s);
/// Half-open bins: <18, [18,25), [25,40), [40,61), >=61.
[[nodiscard]] AgeGroup age_to_group(int age);

inline constexpr int kMinOfficerAge = 21;
inline constexpr int kMaxOfficerAge = 70;

struct DemographicProfile {
  std::string id;
  std::string given_name;
  std::string surname;
  int age = 0;
  std::string sex;
  std::string location;  // "City, ST"
  std::string education_level;
  std::string bachelors_field;
  std::string ethnic_background;
  std::string marital_status;

  [[nodiscard]] std::string name() const { return given_name + " " + surname; }
  [[nodiscard]] std::string city() const;
  [[nodiscard]] std::string state() const;
  [[nodiscard]] AgeGroup age_group() const { return age_to_group(age); }

  [[nodiscard]] Json to_json() const;
  [[nodiscard]] static DemographicProfile from_json(const Json& j);
  bool operator==(const DemographicProfile&) const = default;
};

/// Name rows keyed by (sex, ethnic_background). Given name and surname are
/// drawn independently, each weighted by its row weight.
class NameTable {
 public:
  struct Entry {
    std::string value;
    double weight;
  };

  void add(const std::string& sex, const std::string& ethnicity, std::string given, std::string surname,
           double weight);
  [[nodiscard]] bool has(const std::string& sex, const std::string& ethnicity) const;
  [[nodiscard]] std::pair<std::string, std::string> draw(const std::string& sex, const std::string& ethnicity,
                                                         Rng& rng) const;
  [[nodiscard]] std::size_t key_count() const noexcept { return given_.size(); }

  /// Tab-separated with header: sex, ethnicity, given_name, surname, weight.
  [[nodiscard]] static NameTable load_tsv(const std::filesystem::path& path);

 private:
  using Key = std::pair<std::string, std::string>;
  std::map<Key, std::vector<Entry>> given_;
  std::map<Key, std::vector<Entry>> surname_;
};

struct RosterConfig {
  CategoricalDistribution location;
  CategoricalDistribution sex;
  CategoricalDistribution ethnic_background;
  CategoricalDistribution age_group;
  CategoricalDistribution education_level;
  CategoricalDistribution bachelors_field;
  CategoricalDistribution marital_status;
  /// Inclusive year range per age-group label, intersected with [21, 70].
  std::map<std::string, std::pair<int, int>> age_ranges;
  /// Education levels for which a bachelor's field is drawn; empty = always.
  std::vector<std::string> bachelors_levels;
  std::string no_bachelors_label = "Not Applicable";
  NameTable names;

  /// JSON document with per-field "weights" (normalized) or "probs" (must sum
  /// to 1), "age_ranges", optional "bachelors_levels", and "names" naming a
  /// TSV file relative to the config.
  [[nodiscard]] static RosterConfig load(const std::filesystem::path& path);
  [[nodiscard]] static RosterConfig from_json(const Json& j, const std::filesystem::path& base_dir);
};

/// Chained draw order: location, sex, ethnic_background, name | (sex,
/// ethnicity), age group, age, education_level, bachelors_field, marital_status.
[[nodiscard]] DemographicProfile sample_profile(const RosterConfig& cfg, Rng& rng, std::string id);

/// One generator stream per roster, seeded from `seed`.
[[nodiscard]] std::vector<DemographicProfile> generate_roster(const RosterConfig& cfg, std::size_t n,
                                                              std::uint64_t seed);

/// Known fields: sex, ethnic_background, age_group, age, location, city, state,
/// education_level, bachelors_field, marital_status.
[[nodiscard]] metrics::CategoricalCounts empirical_distribution(const std::vector<DemographicProfile>& roster,
                                                                std::string_view field);
[[nodiscard]] std::string field_value(const DemographicProfile& p, std::string_view field);

}  // namespace psychoforge::demography
