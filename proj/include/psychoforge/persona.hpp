#pragma once

// Persona generation: seed banks, prompt assembly, validation of generated
// documents against the locked demographics, and the quality rubric judge.

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "psychoforge/demography.hpp"
#include "psychoforge/jsonl.hpp"
#include "psychoforge/provider.hpp"
#include "psychoforge/rng.hpp"

namespace psychoforge::persona {

using demography::DemographicProfile;

struct Archetype {
  std::string name;
  std::string core_trait;
  std::string primary_focus;

  /// Text substituted for the archetype description placeholder.
  [[nodiscard]] std::string description() const;
};

struct MemoirSeed {
  std::string title;
  std::string author;
  int year = 0;
  std::string summary;
};

enum class StyleKind { Appearance, Behavior };

struct StyleCategory {
  StyleKind kind = StyleKind::Appearance;
  std::string name;
  std::string definition;
  std::vector<std::string> exemplars;
};

inline constexpr std::size_t kMaxExemplars = 5;

struct SeedBanks {
  std::vector<Archetype> archetypes;
  std::vector<MemoirSeed> memoirs;
  std::vector<StyleCategory> appearance;
  std::vector<StyleCategory> behavior;

  /// Throws EmptyBank naming the first empty bank.
  void check() const;
  /// Reads archetypes.json, memoirs.json, appearance.json and behavior.json.
  /// An optional memoirs_extra.json in the same directory is appended.
  [[nodiscard]] static SeedBanks load(const std::filesystem::path& dir);
};

struct Templates {
  std::string system_text;
  std::string user_template;  // single-brace placeholders
  std::string judge_system;

  /// persona_system.txt, persona_user.txt, persona_judge.txt
  [[nodiscard]] static Templates load(const std::filesystem::path& prompts_dir);
};

struct Selection {
  DemographicProfile demographics;
  Archetype archetype;
  MemoirSeed memoir;
  StyleCategory appearance;
  StyleCategory behavior;
  std::vector<std::string> appearance_examples;
  std::vector<std::string> behavior_examples;
};

/// Uniform draws of archetype, memoir and both style categories, then an
/// exemplar subset of min(5, available) cues per category, in bank order.
[[nodiscard]] Selection select_seeds(const DemographicProfile& profile, const SeedBanks& banks, Rng& rng);

struct Prompt {
  std::string system_text;
  std::string user_text;
};

/// Throws MissingField when a selection value is empty or a placeholder is
/// left without a value.
[[nodiscard]] Prompt build_persona_prompt(const Selection& sel, const Templates& t);

/// Free-text sections in serialization order.
inline constexpr std::array<std::string_view, 13> kTextFields = {
    "memoir_narrative", "appearance",    "behavior",
    "speech",           "mood_affect",   "thought_content",
    "insight_judgment", "cognition",     "medical_developmental_history",
    "family_history",   "educational_vocational_history",
    "emotional_behavioral_functioning",  "social_functioning",
};

inline constexpr std::size_t kNarrativeMinWords = 180;
inline constexpr std::size_t kNarrativeMaxWords = 250;
inline constexpr std::size_t kMinProblems = 3;
inline constexpr std::size_t kMaxProblems = 6;
inline constexpr std::size_t kOverlapRun = 5;

struct PersonaRecord {
  std::string id;
  DemographicProfile demographics;
  std::string archetype_name;
  std::string memoir_title;
  std::string appearance_category;
  std::string behavior_category;
  std::vector<std::string> appearance_examples;
  std::vector<std::string> behavior_examples;
  std::array<std::string, kTextFields.size()> sections;  // indexed like kTextFields
  std::vector<std::string> presenting_problems;
  std::string summary;

  [[nodiscard]] const std::string& section(std::string_view field) const;
  [[nodiscard]] std::string& section(std::string_view field);
  [[nodiscard]] const std::string& memoir_narrative() const { return sections[0]; }

  [[nodiscard]] Json to_json() const;
  [[nodiscard]] static PersonaRecord from_json(const Json& j);
};

/// Structured-output schema for one generation call. The four literal
/// demographics are pinned with single-value enums.
[[nodiscard]] Json persona_output_schema(const DemographicProfile& locked);

/// Assemble a record from a schema-conforming payload. Literal values echoed
/// by the model replace the locked ones so validation can see mismatches.
[[nodiscard]] PersonaRecord record_from_payload(const Json& payload, const Selection& sel);

struct ValidationReport {
  std::vector<std::string> failures;
  [[nodiscard]] bool ok() const noexcept { return failures.empty(); }
};

/// Checks demographic literals against `locked`, the narrative word count
/// (whitespace tokens), the presenting_problems count, and any run of 5
/// consecutive words shared with one of `seed_texts`.
[[nodiscard]] ValidationReport validate_persona(const PersonaRecord& rec, const DemographicProfile& locked,
                                                const std::vector<std::string>& seed_texts = {});
/// Seed texts taken from the selection: archetype description and memoir summary.
[[nodiscard]] ValidationReport validate_persona(const PersonaRecord& rec, const Selection& sel);

/// First shared run of `n` normalized words between `text` and `source`.
[[nodiscard]] std::optional<std::string> shared_run(std::string_view text, std::string_view source,
                                                    std::size_t n = kOverlapRun);

struct GenParams {
  int regenerations = 3;
  provider::Sampling sampling{2.0, 0.98, 0.0, 0.0};
};

struct GenerationOutcome {
  PersonaRecord record;
  int attempts = 0;
};

/// Up to `regenerations` generate-validate rounds with sample_index = round.
/// Throws ExhaustedRetries{attempts = regenerations} when none validates.
[[nodiscard]] GenerationOutcome generate_persona(const Selection& sel, const Templates& t, provider::Provider& p,
                                                 const GenParams& params = {});

inline constexpr std::array<std::string_view, 11> kRubricFields = {
    "clarity",         "originality",     "coherence",          "diversity",
    "realism",         "psychological_depth", "consistency",    "informativeness",
    "ethical_considerations", "demographic_fidelity", "overall_score",
};

struct PersonaRubricScores {
  std::string uid;
  std::array<int, kRubricFields.size()> scores{};

  [[nodiscard]] int score(std::string_view field) const;
  [[nodiscard]] Json to_json() const;
  [[nodiscard]] static PersonaRubricScores from_json(const Json& j);
};

[[nodiscard]] Json rubric_output_schema(const std::string& uid);
[[nodiscard]] PersonaRubricScores judge_persona(const PersonaRecord& rec, const Templates& t, provider::Provider& p);

/// Per-field means; empty input gives zeros.
[[nodiscard]] std::array<double, kRubricFields.size()> rubric_means(const std::vector<PersonaRubricScores>& rows);

/// Markdown table of mean ratings, one row per criterion. With human ratings,
/// a Human column is added and, when uids pair up, a per-criterion kappa.
[[nodiscard]] std::string rubric_table_markdown(const std::vector<PersonaRubricScores>& llm,
                                                const std::vector<PersonaRubricScores>& human = {});

}  // namespace psychoforge::persona
