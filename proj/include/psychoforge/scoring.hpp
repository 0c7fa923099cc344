#pragma once

// HEXACO domain scores, z-scores and level labels, SJT trait proportions,
// alignment tables, population analyses and report rendering.

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "psychoforge/battery.hpp"
#include "psychoforge/jsonl.hpp"
#include "psychoforge/metrics.hpp"
#include "psychoforge/persona.hpp"
#include "psychoforge/sjt.hpp"
#include "psychoforge/stats.hpp"
#include "psychoforge/traits.hpp"

namespace psychoforge::scoring {

// ---------------------------------------------------------------------------
// HEXACO

[[nodiscard]] constexpr int reverse_key(int value) noexcept { return 6 - value; }

/// Applies reverse keying to every reverse-keyed item; applying it twice is
/// the identity.
[[nodiscard]] std::vector<battery::LikertResponse> apply_keying(const std::vector<battery::LikertResponse>& responses,
                                                                const battery::Inventory& inv);

/// Domain means after reverse keying; interstitial items are ignored.
/// Throws MissingItems naming every inventory item without a response.
[[nodiscard]] PerTrait<double> score_hexaco(const battery::BatterySession& session, const battery::Inventory& inv);

struct PopulationStats {
  PerTrait<double> mean{};
  PerTrait<double> sd{};
  std::size_t n = 0;

  /// Population mean and SD (divisor n) over the given score rows.
  [[nodiscard]] static PopulationStats from_scores(const std::vector<PerTrait<double>>& rows);
  /// Tab-separated rows: trait, mean, sd. An optional header and a "# n=<k>"
  /// comment are accepted.
  [[nodiscard]] static PopulationStats load_tsv(const std::filesystem::path& path);
  [[nodiscard]] Json to_json() const;
};

struct TraitZ {
  std::optional<double> z;
  std::string error;  // set when the population SD is zero
};

[[nodiscard]] PerTrait<TraitZ> zscore(const PerTrait<double>& means, const PopulationStats& pop);

/// Symmetric |z| bin edges; labels below the first edge are "Average".
struct LevelBins {
  std::vector<double> edges{0.5, 1.0, 1.25, 2.0};
  std::vector<std::string> stems{"Slightly", "", "Very", "Exceptionally"};

  void check() const;
};

[[nodiscard]] std::string relative_level(double z, const LevelBins& bins = {});

struct HexacoScores {
  std::string persona_id;
  PerTrait<double> mean{};
  PerTrait<TraitZ> z{};
  PerTrait<std::string> level{};  // empty when z is undefined

  [[nodiscard]] Json to_json() const;
};

[[nodiscard]] HexacoScores make_scores(std::string persona_id, const PerTrait<double>& means,
                                       const PopulationStats& pop, const LevelBins& bins = {});

// ---------------------------------------------------------------------------
// SJT proportions and alignment

struct TraitProportions {
  PerTrait<std::size_t> counts{};
  PerTrait<double> fraction{};
  std::size_t answered = 0;
  std::size_t unanswered = 0;

  [[nodiscard]] Json to_json() const;
};

/// Unanswered items are excluded from the denominator. Throws ZeroAnswered.
[[nodiscard]] TraitProportions trait_proportions(const battery::BatterySession& session);
[[nodiscard]] TraitProportions proportions_from_counts(const PerTrait<std::size_t>& counts, std::size_t unanswered = 0);

/// 1-based descending ranks; ties go to canonical trait order.
[[nodiscard]] PerTrait<int> descending_ranks(const PerTrait<double>& values);

/// Maps (z, proportion) per trait to an alignment label per trait.
using AlignmentRule = std::function<PerTrait<std::string>(const PerTrait<double>& z, const PerTrait<double>& props)>;

/// |rank(z) - rank(proportion)|: 0 Strong alignment, 1 Alignment,
/// 2 Moderate alignment, 3+ Weak alignment.
[[nodiscard]] PerTrait<std::string> rank_difference_rule(const PerTrait<double>& z, const PerTrait<double>& props);

struct AlignmentRow {
  Trait trait = Trait::H;
  std::optional<double> z;
  std::string relative_level;
  double sjt_percent = 0.0;
  std::string alignment_label;
};

/// Rows in canonical order. Traits with undefined z are ranked with z = 0.
[[nodiscard]] std::vector<AlignmentRow> alignment_labels(const HexacoScores& scores, const TraitProportions& props,
                                                         const AlignmentRule& rule = rank_difference_rule);

// ---------------------------------------------------------------------------
// Population analyses

struct PersonaRow {
  std::string persona_id;
  std::optional<persona::PersonaRecord> record;
  PerTrait<double> hexaco{};
  TraitProportions props;
  std::map<std::string, Trait> choices;  // answered SJT items
};

struct Population {
  std::vector<PersonaRow> rows;
  std::map<std::string, sjt::SeedAttributes> item_seeds;
};

/// Joins sessions by persona id; personas lacking either instrument are
/// skipped. Rows follow the order of `hexaco_sessions`.
[[nodiscard]] Population build_population(const std::vector<battery::BatterySession>& hexaco_sessions,
                                          const std::vector<battery::BatterySession>& sjt_sessions,
                                          const battery::Inventory& inv,
                                          const std::vector<persona::PersonaRecord>& personas = {},
                                          const std::vector<sjt::SJTItem>& bank = {});

struct CorrelationRow {
  Trait trait = Trait::H;
  std::optional<double> r;
  std::size_t n = 0;
  std::string note;  // "degenerate variance" when r is undefined
};

struct PointBiserialRow {
  std::string item_id;
  Trait trait = Trait::H;
  std::optional<double> r_pb;
  std::size_t n = 0;
  std::string note;
};

struct CorrelationTable {
  std::vector<CorrelationRow> pearson;
  std::vector<PointBiserialRow> point_biserial;

  [[nodiscard]] Json to_json() const;
};

/// Throws TooFewObservations below 3 personas.
[[nodiscard]] CorrelationTable cross_persona_correlations(const Population& pop);

struct RegressionRow {
  Trait trait = Trait::H;
  std::optional<stats::RegressionFit> fit;
  std::string note;  // set when the response is constant
};

/// OLS of each trait's SJT proportion on all six HEXACO scores plus
/// intercept. Throws TooFewObservations unless n > 7 and RankDeficient when
/// the scores are collinear.
[[nodiscard]] std::vector<RegressionRow> trait_regressions(const Population& pop);

struct Slice {
  std::string value;
  std::size_t personas = 0;
  TraitProportions props;
  double shannon = 0.0;
  double inverse_simpson = 0.0;
};

struct SliceReport {
  std::string field;
  std::vector<Slice> slices;
  std::vector<std::string> warnings;

  [[nodiscard]] Json to_json() const;
};

/// Persona fields: archetype, memoir, appearance_category, behavior_category,
/// sex, age_group, education_level, ethnic_background, marital_status,
/// state. Any seed attribute name slices SJT responses by item seed.
[[nodiscard]] std::vector<std::string> persona_slice_fields();
[[nodiscard]] SliceReport slice_report(const Population& pop, const std::string& by,
                                       const sjt::AttributeDomains* domains = nullptr);

struct PcaSummary {
  std::vector<double> explained_variance_ratio;
  std::vector<std::vector<double>> components;
};
[[nodiscard]] PcaSummary hexaco_pca(const Population& pop, std::size_t k = 2);

struct MetricRow {
  std::string metric;
  double value = 0.0;
};

/// Lexical and semantic diversity of an SJT bank: one document per item,
/// question followed by the six options. Embeddings are optional.
[[nodiscard]] std::vector<MetricRow> diversity_table(const std::vector<sjt::SJTItem>& bank,
                                                     const metrics::TokenizerConfig& cfg,
                                                     const metrics::EmbeddingSet* embeddings = nullptr);
[[nodiscard]] std::vector<std::string> bank_documents(const std::vector<sjt::SJTItem>& bank);

// ---------------------------------------------------------------------------
// Reports

struct PersonaReport {
  HexacoScores scores;
  TraitProportions props;
  std::vector<AlignmentRow> rows;
};

struct Document {
  Json json;
  std::string markdown;
};

/// Alignment table rows are ordered by SJT percentage, highest first.
[[nodiscard]] Document render_persona_report(const PersonaReport& report);

struct RunReport {
  std::vector<PersonaReport> personas;
  PopulationStats population;
  std::optional<CorrelationTable> correlations;
  std::vector<RegressionRow> regressions;
  std::vector<SliceReport> slices;
  std::optional<PcaSummary> pca;
  std::vector<MetricRow> diversity;
};

[[nodiscard]] Document render_run_report(const RunReport& report);

[[nodiscard]] std::string regression_table_markdown(const std::vector<RegressionRow>& rows);
[[nodiscard]] std::string diversity_table_markdown(const std::vector<MetricRow>& rows);

}  // namespace psychoforge::scoring
