#include "psychoforge/demography.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <tuple>

#include "psychoforge/error.hpp"
#include "psychoforge/text.hpp"

namespace psychoforge::demography {
namespace {

constexpr double kProbTolerance = 1e-9;

std::size_t weighted_index(const std::vector<NameTable::Entry>& rows, Rng& rng) {
  double total = 0.0;
  for (const auto& r : rows) total += r.weight;
  const double u = rng.uniform01() * total;
  double acc = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    acc += rows[i].weight;
    if (u < acc) return i;
  }
  return rows.size() - 1;
}

void add_entry(std::vector<NameTable::Entry>& rows, std::string value, double weight) {
  for (auto& r : rows) {
    if (r.value == value) {
      r.weight += weight;
      return;
    }
  }
  rows.push_back({std::move(value), weight});
}

CategoricalDistribution distribution_from_json(const Json& j, const std::string& field) {
  if (!j.is_object()) fail(ErrorCode::Config, "demography field '" + field + "' must be an object");
  const bool has_w = j.contains("weights");
  const bool has_p = j.contains("probs");
  if (has_w == has_p) fail(ErrorCode::Config, "demography field '" + field + "' needs exactly one of weights/probs");
  const Json& table = has_w ? j["weights"] : j["probs"];
  if (!table.is_object() || table.empty()) fail(ErrorCode::Config, "demography field '" + field + "' has no labels");
  std::vector<std::string> labels;
  std::vector<double> values;
  for (const auto& [label, v] : table.items()) {
    if (!v.is_number()) fail(ErrorCode::Config, "demography field '" + field + "': non-numeric value for " + label);
    labels.push_back(label);
    values.push_back(v.get<double>());
  }
  try {
    if (has_w) return CategoricalDistribution::from_weights(std::move(labels), values);
    CategoricalDistribution d{std::move(labels), std::move(values)};
    d.validate();
    return d;
  } catch (const Error& e) {
    fail(e.code(), "demography field '" + field + "': " + e.what());
  }
}

}  // namespace

void CategoricalDistribution::validate() const {
  if (labels.empty()) fail(ErrorCode::InvalidDistribution, "distribution has no labels");
  if (labels.size() != probs.size()) fail(ErrorCode::InvalidDistribution, "labels and probs differ in length");
  std::set<std::string> seen;
  double sum = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!seen.insert(labels[i]).second) fail(ErrorCode::InvalidDistribution, "duplicate label '" + labels[i] + "'");
    if (!(probs[i] >= 0.0) || !std::isfinite(probs[i])) {
      fail(ErrorCode::InvalidDistribution, "probability for '" + labels[i] + "' is negative or non-finite");
    }
    sum += probs[i];
  }
  if (std::fabs(sum - 1.0) > kProbTolerance) {
    fail(ErrorCode::InvalidDistribution, "probabilities sum to " + text::fixed(sum, 12) + ", expected 1");
  }
}

CategoricalDistribution CategoricalDistribution::from_weights(std::vector<std::string> labels,
                                                              const std::vector<double>& weights) {
  if (labels.size() != weights.size()) fail(ErrorCode::InvalidDistribution, "labels and weights differ in length");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) fail(ErrorCode::InvalidDistribution, "weights must be finite and >= 0");
    total += w;
  }
  if (total <= 0.0) fail(ErrorCode::InvalidDistribution, "weights sum to zero");
  CategoricalDistribution d;
  d.labels = std::move(labels);
  for (double w : weights) d.probs.push_back(w / total);
  d.validate();
  return d;
}

double CategoricalDistribution::prob(std::string_view label) const {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == label) return probs[i];
  }
  return 0.0;
}

const std::string& sample_categorical(const CategoricalDistribution& dist, Rng& rng) {
  if (dist.labels.empty() || dist.labels.size() != dist.probs.size()) {
    fail(ErrorCode::InvalidDistribution, "distribution has no labels or mismatched probs");
  }
  double sum = 0.0;
  for (double p : dist.probs) {
    if (!(p >= 0.0)) fail(ErrorCode::InvalidDistribution, "negative probability");
    sum += p;
  }
  if (std::fabs(sum - 1.0) > kProbTolerance) {
    fail(ErrorCode::InvalidDistribution, "probabilities sum to " + text::fixed(sum, 12) + ", expected 1");
  }
  const double u = rng.uniform01();
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < dist.labels.size(); ++i) {
    if (dist.probs[i] <= 0.0) continue;
    last_positive = i;
    acc += dist.probs[i];
    if (u < acc) return dist.labels[i];
  }
  // Rounding can leave acc a hair below 1.
  return dist.labels[last_positive];
}

std::string_view to_string(AgeGroup g) noexcept {
  switch (g) {
    case AgeGroup::Juvenile: return "Juvenile";
    case AgeGroup::YoungAdult: return "Young Adult";
    case AgeGroup::Adult: return "Adult";
    case AgeGroup::MiddleAged: return "Middle Aged";
    case AgeGroup::Senior: return "Senior";
    case AgeGroup::Unknown: return "Unknown";
  }
  return "Unknown";
}

std::optional<AgeGroup> parse_age_group(std::string_view s) {
  const auto k = text::label_key(s);
  for (AgeGroup g : {AgeGroup::Juvenile, AgeGroup::YoungAdult, AgeGroup::Adult, AgeGroup::MiddleAged,
                     AgeGroup::Senior, AgeGroup::Unknown}) {
    if (k == text::label_key(to_string(g))) return g;
  }
  return std::nullopt;
}

AgeGroup age_to_group(int age) {
  if (age < 0) fail(ErrorCode::NegativeAge, "age " + std::to_string(age) + " is negative");
  if (age < 18) return AgeGroup::Juvenile;
  if (age < 25) return AgeGroup::YoungAdult;
  if (age < 40) return AgeGroup::Adult;
  if (age < 61) return AgeGroup::MiddleAged;
  return AgeGroup::Senior;
}

std::string DemographicProfile::city() const {
  const auto pos = location.rfind(", ");
  return pos == std::string::npos ? location : location.substr(0, pos);
}

std::string DemographicProfile::state() const {
  const auto pos = location.rfind(", ");
  return pos == std::string::npos ? std::string() : location.substr(pos + 2);
}

Json DemographicProfile::to_json() const {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["id"] = id;
  j["name"] = name();
  j["given_name"] = given_name;
  j["surname"] = surname;
  j["age"] = age;
  j["age_group"] = std::string(to_string(age_group()));
  j["sex"] = sex;
  j["location"] = location;
  j["education_level"] = education_level;
  j["bachelors_field"] = bachelors_field;
  j["ethnic_background"] = ethnic_background;
  j["marital_status"] = marital_status;
  return j;
}

DemographicProfile DemographicProfile::from_json(const Json& j) {
  auto str = [&](const char* k) -> std::string {
    if (!j.contains(k) || !j[k].is_string()) fail(ErrorCode::SchemaInvalid, std::string("profile missing '") + k + "'");
    return j[k].get<std::string>();
  };
  DemographicProfile p;
  p.id = str("id");
  p.given_name = str("given_name");
  p.surname = str("surname");
  if (!j.contains("age") || !j["age"].is_number_integer()) fail(ErrorCode::SchemaInvalid, "profile missing 'age'");
  p.age = j["age"].get<int>();
  p.sex = str("sex");
  p.location = str("location");
  p.education_level = str("education_level");
  p.bachelors_field = str("bachelors_field");
  p.ethnic_background = str("ethnic_background");
  p.marital_status = str("marital_status");
  return p;
}

void NameTable::add(const std::string& sex, const std::string& ethnicity, std::string given, std::string surname,
                    double weight) {
  if (!(weight > 0.0) || !std::isfinite(weight)) fail(ErrorCode::InvalidDistribution, "name weight must be positive");
  const Key k{sex, ethnicity};
  add_entry(given_[k], std::move(given), weight);
  add_entry(surname_[k], std::move(surname), weight);
}

bool NameTable::has(const std::string& sex, const std::string& ethnicity) const {
  return given_.count(Key{sex, ethnicity}) > 0;
}

std::pair<std::string, std::string> NameTable::draw(const std::string& sex, const std::string& ethnicity,
                                                    Rng& rng) const {
  const Key k{sex, ethnicity};
  auto g = given_.find(k);
  if (g == given_.end()) {
    fail(ErrorCode::MissingNameTable, "no name table for (sex='" + sex + "', ethnicity='" + ethnicity + "')");
  }
  const auto& given = g->second[weighted_index(g->second, rng)].value;
  const auto& sur = surname_.at(k);
  return {given, sur[weighted_index(sur, rng)].value};
}

NameTable NameTable::load_tsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Config, "cannot open name table: " + path.string());
  NameTable t;
  std::string line;
  std::size_t lineno = 0;
  bool header = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty() || line[0] == '#') continue;
    auto cols = text::split(line, '\t');
    if (header) {
      header = false;
      if (cols.size() != 5 || cols[0] != "sex" || cols[1] != "ethnicity" || cols[2] != "given_name" ||
          cols[3] != "surname" || cols[4] != "weight") {
        fail(ErrorCode::Config, path.string() + ": expected header sex, ethnicity, given_name, surname, weight");
      }
      continue;
    }
    if (cols.size() != 5) fail(ErrorCode::Config, path.string() + ":" + std::to_string(lineno) + ": expected 5 columns");
    double w = 0.0;
    try {
      w = std::stod(cols[4]);
    } catch (const std::exception&) {
      fail(ErrorCode::Config, path.string() + ":" + std::to_string(lineno) + ": bad weight");
    }
    t.add(cols[0], cols[1], cols[2], cols[3], w);
  }
  return t;
}

RosterConfig RosterConfig::load(const std::filesystem::path& path) {
  Json j;
  try {
    j = Json::parse(text::read_file(path));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Config, path.string() + ": " + e.what());
  }
  return from_json(j, path.parent_path());
}

RosterConfig RosterConfig::from_json(const Json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object() || !j.contains("fields")) fail(ErrorCode::Config, "demography config needs a 'fields' object");
  const Json& f = j["fields"];
  auto field = [&](const char* name) {
    if (!f.contains(name)) fail(ErrorCode::Config, std::string("demography config missing field '") + name + "'");
    return distribution_from_json(f[name], name);
  };
  RosterConfig c;
  c.location = field("location");
  c.sex = field("sex");
  c.ethnic_background = field("ethnic_background");
  c.age_group = field("age_group");
  c.education_level = field("education_level");
  c.bachelors_field = field("bachelors_field");
  c.marital_status = field("marital_status");

  if (!j.contains("age_ranges") || !j["age_ranges"].is_object()) {
    fail(ErrorCode::Config, "demography config missing 'age_ranges'");
  }
  for (const auto& [label, r] : j["age_ranges"].items()) {
    if (!r.is_array() || r.size() != 2 || !r[0].is_number_integer() || !r[1].is_number_integer()) {
      fail(ErrorCode::Config, "age range for '" + label + "' must be [lo, hi]");
    }
    int lo = std::max(r[0].get<int>(), kMinOfficerAge);
    int hi = std::min(r[1].get<int>(), kMaxOfficerAge);
    if (lo > hi) fail(ErrorCode::Config, "age range for '" + label + "' is empty within [21, 70]");
    c.age_ranges[label] = {lo, hi};
  }
  for (std::size_t i = 0; i < c.age_group.labels.size(); ++i) {
    if (c.age_group.probs[i] > 0.0 && !c.age_ranges.count(c.age_group.labels[i])) {
      fail(ErrorCode::Config, "no age range for group '" + c.age_group.labels[i] + "'");
    }
  }
  if (j.contains("bachelors_levels")) c.bachelors_levels = j["bachelors_levels"].get<std::vector<std::string>>();
  if (j.contains("no_bachelors_label")) c.no_bachelors_label = j["no_bachelors_label"].get<std::string>();
  if (!j.contains("names") || !j["names"].is_string()) fail(ErrorCode::Config, "demography config missing 'names'");
  std::filesystem::path names = j["names"].get<std::string>();
  if (names.is_relative()) names = base_dir / names;
  c.names = NameTable::load_tsv(names);
  return c;
}

DemographicProfile sample_profile(const RosterConfig& cfg, Rng& rng, std::string id) {
  DemographicProfile p;
  p.id = std::move(id);
  p.location = sample_categorical(cfg.location, rng);
  p.sex = sample_categorical(cfg.sex, rng);
  p.ethnic_background = sample_categorical(cfg.ethnic_background, rng);
  std::tie(p.given_name, p.surname) = cfg.names.draw(p.sex, p.ethnic_background, rng);
  const std::string& group = sample_categorical(cfg.age_group, rng);
  const auto range = cfg.age_ranges.find(group);
  if (range == cfg.age_ranges.end()) fail(ErrorCode::Config, "no age range for group '" + group + "'");
  p.age = static_cast<int>(rng.between(range->second.first, range->second.second));
  p.education_level = sample_categorical(cfg.education_level, rng);
  const bool gated = !cfg.bachelors_levels.empty() &&
                     std::find(cfg.bachelors_levels.begin(), cfg.bachelors_levels.end(), p.education_level) ==
                         cfg.bachelors_levels.end();
  p.bachelors_field = gated ? cfg.no_bachelors_label : sample_categorical(cfg.bachelors_field, rng);
  p.marital_status = sample_categorical(cfg.marital_status, rng);
  return p;
}

std::vector<DemographicProfile> generate_roster(const RosterConfig& cfg, std::size_t n, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "roster"));
  std::vector<DemographicProfile> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "officer-%05zu", i + 1);
    out.push_back(sample_profile(cfg, rng, id));
  }
  return out;
}

std::string field_value(const DemographicProfile& p, std::string_view field) {
  if (field == "sex") return p.sex;
  if (field == "ethnic_background") return p.ethnic_background;
  if (field == "age_group") return std::string(to_string(p.age_group()));
  if (field == "age") return std::to_string(p.age);
  if (field == "location") return p.location;
  if (field == "city") return p.city();
  if (field == "state") return p.state();
  if (field == "education_level") return p.education_level;
  if (field == "bachelors_field") return p.bachelors_field;
  if (field == "marital_status") return p.marital_status;
  fail(ErrorCode::UnknownField, "unknown demographic field '" + std::string(field) + "'");
}

metrics::CategoricalCounts empirical_distribution(const std::vector<DemographicProfile>& roster,
                                                  std::string_view field) {
  metrics::CategoricalCounts c;
  // Validate the field name even for an empty roster.
  (void)field_value(DemographicProfile{}, field);
  for (const auto& p : roster) ++c.counts[field_value(p, field)];
  return c;
}

}  // namespace psychoforge::demography
