#pragma once

// Situational judgment test bank: seed attribute space, base scenarios,
// variant generation, trait-bleed refinement and the two judge rubrics.

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "psychoforge/error.hpp"
#include "psychoforge/jsonl.hpp"
#include "psychoforge/provider.hpp"
#include "psychoforge/rng.hpp"
#include "psychoforge/traits.hpp"

namespace psychoforge::sjt {

// ---------------------------------------------------------------------------
// Seed attributes

/// Attribute names in prompt order.
inline constexpr std::array<std::string_view, 11> kAttributeNames = {
    "urgency_level",          "threat_level",   "ambiguity_level", "individuals_involved",
    "authority_relationships", "ethical_considerations", "situation_type", "time_of_day",
    "race",                   "gender",         "age",
};

inline constexpr std::string_view kUnknown = "Unknown";

struct AttributeDomain {
  std::string name;
  std::string display;
  std::vector<std::string> values;
  std::map<std::string, std::string> aliases;  // alternate spelling -> canonical

  [[nodiscard]] bool contains(std::string_view value) const;
  /// Canonical label for a value, an alias, or a punctuation/case variant.
  [[nodiscard]] std::optional<std::string> canonical(std::string_view label) const;
  /// Canonical values, aliases and "Unknown", for structured-output enums.
  [[nodiscard]] std::vector<std::string> accepted_labels() const;
};

struct AttributeDomains {
  std::vector<AttributeDomain> attributes;

  [[nodiscard]] const AttributeDomain& at(std::string_view name) const;
  [[nodiscard]] const AttributeDomain* find(std::string_view name) const;
  [[nodiscard]] static AttributeDomains load(const std::filesystem::path& path);
  [[nodiscard]] static AttributeDomains from_json(const Json& j);
};

/// Product of domain sizes. Throws EmptyDomain if any domain is empty.
[[nodiscard]] std::uint64_t seed_space_cardinality(const AttributeDomains& domains);

/// One value per attribute, in domain order.
struct SeedAttributes {
  std::vector<std::pair<std::string, std::string>> values;

  [[nodiscard]] const std::string* find(std::string_view name) const;
  [[nodiscard]] const std::string& at(std::string_view name) const;
  void set(const std::string& name, std::string value);

  [[nodiscard]] Json to_json() const;
  [[nodiscard]] static SeedAttributes from_json(const Json& j);
  bool operator==(const SeedAttributes&) const = default;
};

/// Throws InvalidArgument if a value lies outside its domain or an
/// attribute is missing.
void validate_seed(const SeedAttributes& seed, const AttributeDomains& domains);

enum class SeedSampling { IidUniform, Balanced };

[[nodiscard]] std::string_view to_string(SeedSampling m) noexcept;
[[nodiscard]] SeedSampling parse_seed_sampling(std::string_view s);

/// Balanced: each attribute column is a cyclic assignment of its labels
/// shuffled independently, so marginal counts differ by at most one.
[[nodiscard]] std::vector<SeedAttributes> sample_seeds(const AttributeDomains& domains, std::size_t n, Rng& rng,
                                                       SeedSampling mode);

// ---------------------------------------------------------------------------
// Scenarios and items

struct Options {
  std::string question;
  PerTrait<std::string> options;

  /// Payload shape: {"question", "honesty_humility_option", ...}.
  [[nodiscard]] Json to_payload() const;
  [[nodiscard]] static Options from_payload(const Json& j);
  bool operator==(const Options&) const = default;
};

struct BaseScenario {
  std::string id;
  std::string template_question;
  PerTrait<std::string> options;
};

/// Throws MissingField when an option is empty.
void check_base(const BaseScenario& base);
[[nodiscard]] std::vector<BaseScenario> load_base_scenarios(const std::filesystem::path& path);

/// Replaces "[field]" and "[suspectN_field]" with seed values. Any other
/// bracketed lowercase name throws UnknownPlaceholder.
[[nodiscard]] std::string instantiate_text(std::string_view tmpl, const SeedAttributes& seed);
[[nodiscard]] Options instantiate_template(const BaseScenario& base, const SeedAttributes& seed);
/// True when bracketed placeholder syntax remains.
[[nodiscard]] bool has_placeholder(std::string_view s);

enum class ItemStatus { Draft, Clean, BudgetExhausted };
[[nodiscard]] std::string_view to_string(ItemStatus s) noexcept;

struct SJTItem {
  std::string id;
  std::string base_id;
  SeedAttributes seed;
  Options content;
  std::vector<std::string> lineage;
  ItemStatus status = ItemStatus::Draft;

  /// Throws InvariantViolation on an empty option or unresolved placeholder.
  void check() const;
  [[nodiscard]] Json to_json() const;
  [[nodiscard]] static SJTItem from_json(const Json& j);
};

/// "sjt-" + 16 hex digits of the content hash of base id, seed and text.
[[nodiscard]] std::string item_id(const std::string& base_id, const SeedAttributes& seed, const Options& content);

[[nodiscard]] std::vector<SJTItem> load_bank(const std::filesystem::path& path);
void save_bank(const std::filesystem::path& path, const std::vector<SJTItem>& items);

// ---------------------------------------------------------------------------
// Prompts

struct PromptTemplate {
  std::string system_text;
  std::string user_template;  // double-brace placeholders

  /// File holds the system text, a line "===USER===", then the user template.
  [[nodiscard]] static PromptTemplate load(const std::filesystem::path& path);
  [[nodiscard]] static PromptTemplate parse(std::string_view text);
};

struct Templates {
  PromptTemplate create;
  PromptTemplate trait_bleed;
  PromptTemplate rubric1;
  PromptTemplate rubric2;
  PromptTemplate paraphrase;

  [[nodiscard]] static Templates load(const std::filesystem::path& prompts_dir);
};

struct Prompt {
  std::string system_text;
  std::string user_text;
};

/// Numbered option list "1. ...\n2. ..." in canonical trait order, without
/// trait names.
[[nodiscard]] std::string answer_options_text(const Options& o);

[[nodiscard]] Prompt build_variant_prompt(const BaseScenario& base, const SeedAttributes& seed, const Templates& t);
[[nodiscard]] Prompt build_trait_bleed_prompt(const Options& content, const Templates& t);
[[nodiscard]] Prompt build_rubric1_prompt(const Options& content, const SeedAttributes& seed, const Templates& t);
/// Sees question and option text only.
[[nodiscard]] Prompt build_rubric2_prompt(const Options& content, const Templates& t);

[[nodiscard]] Json options_schema();

// ---------------------------------------------------------------------------
// Generation and refinement

struct GenParams {
  provider::Sampling sampling{1.5, 0.95, 0.4, 0.3};
};

/// `key` distinguishes items built from the same base and seed.
[[nodiscard]] SJTItem generate_sjt(const BaseScenario& base, const SeedAttributes& seed, const Templates& t,
                                   provider::Provider& p, const std::string& key, const GenParams& params = {});

struct TraitFit {
  int score = 0;
  std::string analysis;
  std::optional<std::string> suggested_correction;
};

struct TraitBleedReport {
  std::string scenario_summary;
  PerTrait<TraitFit> fits;
  Options corrected;
  std::string overall_notes;

  [[nodiscard]] bool clean(int threshold) const;
  [[nodiscard]] Json to_json() const;
  [[nodiscard]] static TraitBleedReport from_json(const Json& j);
};

[[nodiscard]] Json trait_bleed_schema();
[[nodiscard]] TraitBleedReport evaluate_trait_bleed(const SJTItem& item, const Templates& t, provider::Provider& p,
                                                    int iteration = 0);

struct DebleedParams {
  int max_iters = 3;
  int threshold = 5;  // every trait-fit score must reach this
};

struct DebleedResult {
  SJTItem item;
  std::vector<TraitBleedReport> reports;
};

/// Raised when a provider call fails mid-loop; carries the lineage so far.
class DebleedError : public Error {
 public:
  DebleedError(const Error& cause, DebleedResult partial)
      : Error(cause.code(), cause.what(), cause.attempts()), partial_(std::move(partial)) {}
  [[nodiscard]] const DebleedResult& partial() const noexcept { return partial_; }

 private:
  DebleedResult partial_;
};

[[nodiscard]] DebleedResult debleed_loop(SJTItem item, const Templates& t, provider::Provider& p,
                                         const DebleedParams& params = {});

/// Optional rewrite of option wording; question and trait mapping unchanged.
[[nodiscard]] SJTItem paraphrase_options(const SJTItem& item, const Templates& t, provider::Provider& p);

// ---------------------------------------------------------------------------
// Judges

struct Scored {
  int score = 0;
  std::string justification;
};

struct TraitAlignment {
  int score = 0;
  std::string justification;
  std::vector<Trait> overlaps;
};

struct RubricOneReport {
  Scored scenario_realism;
  PerTrait<TraitAlignment> trait_alignment;
  Scored ethical_tension;
  Scored fairness;

  [[nodiscard]] Json to_json() const;
  /// Throws InvariantViolation when an option lists its own trait as overlap.
  [[nodiscard]] static RubricOneReport from_json(const Json& j);
};

[[nodiscard]] Json rubric1_schema();
[[nodiscard]] RubricOneReport judge_rubric1(const SJTItem& item, const Templates& t, provider::Provider& p);

/// Attributes inferred by rubric 2; ethical considerations are not asked for.
inline constexpr std::array<std::string_view, 10> kInferredAttributes = {
    "urgency_level",  "threat_level", "ambiguity_level", "individuals_involved", "authority_relationships",
    "situation_type", "time_of_day",  "race",            "gender",               "age",
};

inline constexpr std::array<std::string_view, 6> kOptionOrdinals = {
    "first_option", "second_option", "third_option", "fourth_option", "fifth_option", "sixth_option"};

struct InferredValue {
  std::string value;  // canonical label or "Unknown"
  double confidence = 0.0;
  std::string justification;
};

struct OptionInference {
  std::vector<std::pair<Trait, double>> weights;  // canonical trait order
  double confidence = 0.0;
  std::string justification;

  /// Highest weight, ties broken by canonical order.
  [[nodiscard]] std::optional<Trait> primary() const;
};

struct RubricTwoReport {
  std::vector<std::pair<std::string, InferredValue>> attributes;  // kInferredAttributes order
  std::array<OptionInference, kTraitCount> options;               // presentation position
  InferredValue rubric_quality;

  [[nodiscard]] const InferredValue& attribute(std::string_view name) const;
  [[nodiscard]] Json to_json() const;
  /// Normalizes labels to canonical spellings. Throws SchemaInvalid on an
  /// unknown trait name or weights summing above 1.
  [[nodiscard]] static RubricTwoReport from_json(const Json& j, const AttributeDomains& domains);
};

[[nodiscard]] Json rubric2_schema(const AttributeDomains& domains);
[[nodiscard]] RubricTwoReport judge_rubric2(const SJTItem& item, const AttributeDomains& domains, const Templates& t,
                                            provider::Provider& p);

struct AgreementRow {
  std::string attribute;  // display name
  std::optional<double> kappa;  // nullopt when chance agreement is degenerate
  std::size_t items = 0;
};

/// Cohen's kappa between true and inferred labels per inferred attribute,
/// in kInferredAttributes order. Throws LengthMismatch.
[[nodiscard]] std::vector<AgreementRow> seed_recovery_agreement(const std::vector<SeedAttributes>& truths,
                                                                const std::vector<RubricTwoReport>& inferred,
                                                                const AttributeDomains& domains);

/// Agreement between intended and primary inferred trait over all options.
[[nodiscard]] AgreementRow trait_mapping_agreement(const std::vector<RubricTwoReport>& inferred);

[[nodiscard]] std::string agreement_table_markdown(const std::vector<AgreementRow>& rows);

}  // namespace psychoforge::sjt
