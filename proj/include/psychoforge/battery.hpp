#pragma once

// Administration of the HEXACO-100 inventory and SJT sets to
// persona-conditioned models, with presentation controls.

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "psychoforge/error.hpp"
#include "psychoforge/persona.hpp"
#include "psychoforge/provider.hpp"
#include "psychoforge/sjt.hpp"
#include "psychoforge/traits.hpp"

namespace psychoforge::battery {

// ---------------------------------------------------------------------------
// Inventory

inline constexpr std::size_t kInventorySize = 100;
inline constexpr std::size_t kItemsPerDomain = 16;
inline constexpr std::size_t kInterstitialItems = 4;

struct InventoryItem {
  int item_id = 0;
  std::optional<Trait> domain;  // nullopt for interstitial items
  bool reverse_keyed = false;
  std::string text;
};

struct Inventory {
  std::vector<InventoryItem> items;

  /// 100 items with ids 1..100, 16 per domain and 4 interstitial.
  void check() const;
  [[nodiscard]] const InventoryItem& item(int item_id) const;
  /// Tab-separated with header: item_id, domain, reverse_keyed, text.
  [[nodiscard]] static Inventory load_tsv(const std::filesystem::path& path);
};

/// Likert labels in value order: index i holds the label for value i + 1.
inline constexpr std::array<std::string_view, 5> kLikertLabels = {"Strongly Disagree", "Disagree", "Neutral", "Agree",
                                                                  "Strongly Agree"};
/// Throws InvalidArgument for a label outside the map.
[[nodiscard]] int likert_value(std::string_view label);

// ---------------------------------------------------------------------------
// Presentation

enum class Control { Fixed, Shuffle, Invert };
[[nodiscard]] std::string_view to_string(Control c) noexcept;
[[nodiscard]] Control parse_control(std::string_view s);

struct PresentationRecord {
  std::string item_id;
  /// displayed_order[k] is the trait shown under label k + 1.
  PerTrait<Trait> displayed_order{};

  [[nodiscard]] Trait label_to_trait(int label) const;
  [[nodiscard]] int trait_to_label(Trait t) const;
  [[nodiscard]] bool is_bijection() const;
};

/// Fixed: canonical order. Invert: reversed. Shuffle: permutation from a
/// generator keyed by (seed, persona, item).
[[nodiscard]] PresentationRecord present(const std::string& item_id, Control c, std::uint64_t seed,
                                         const std::string& persona_id);

// ---------------------------------------------------------------------------
// Sessions

struct LikertResponse {
  int item_id = 0;
  int value = 0;  // 1..5
  int position = 0;  // 0-based presentation position
};

struct SjtResponse {
  std::string item_id;
  std::optional<int> label;   // nullopt when unanswered
  std::optional<Trait> trait;
  [[nodiscard]] bool answered() const noexcept { return trait.has_value(); }
};

enum class Instrument { Hexaco100, SjtSet };

using Clock = std::function<std::string()>;
/// ISO-8601 UTC from SOURCE_DATE_EPOCH when set, otherwise the system clock.
[[nodiscard]] Clock default_clock();
[[nodiscard]] Clock fixed_clock(std::string stamp);
[[nodiscard]] std::string iso8601_utc(std::int64_t epoch_seconds);

struct BatterySession {
  std::string persona_id;
  Instrument instrument = Instrument::Hexaco100;
  std::string bank_id;  // SJT sets only
  std::string model_name;
  Control control = Control::Fixed;
  std::uint64_t seed = 0;
  std::string conditioning;  // identifies the persona serialization
  std::vector<LikertResponse> likert;
  std::vector<SjtResponse> sjt;
  std::vector<PresentationRecord> presentation;
  /// Items completed in presentation order; equals the item count when done.
  std::size_t cursor = 0;
  bool complete = false;
  std::string started_at;
  std::string finished_at;

  [[nodiscard]] std::string instrument_name() const;
  [[nodiscard]] Json to_json() const;
  [[nodiscard]] static BatterySession from_json(const Json& j);
};

[[nodiscard]] std::vector<BatterySession> load_sessions(const std::filesystem::path& path);
void save_sessions(const std::filesystem::path& path, const std::vector<BatterySession>& sessions);

struct Templates {
  std::string system_template;  // {{persona}}
  std::string hexaco_template;  // {{statement}}, {{scale}}
  std::string sjt_template;     // {{question}}, {{options}}

  [[nodiscard]] static Templates load(const std::filesystem::path& prompts_dir);
};

inline constexpr std::string_view kConditioningId = "labeled-sections-v1";

/// Persona as labeled sections: demographics, then each free-text section
/// and the presenting problems in record order, then the summary.
[[nodiscard]] std::string render_persona(const persona::PersonaRecord& rec);

struct Controls {
  Control control = Control::Fixed;
  std::uint64_t seed = 0;
  Clock clock;  // default_clock() when empty
};

/// Raised on a provider failure that is not a per-item schema failure. The
/// partial session holds every item before the failing one.
class AdministerError : public Error {
 public:
  AdministerError(const Error& cause, std::string item_id, BatterySession partial)
      : Error(cause.code(), "item " + item_id + ": " + cause.what(), cause.attempts()),
        item_id_(std::move(item_id)),
        partial_(std::move(partial)) {}
  [[nodiscard]] const std::string& item_id() const noexcept { return item_id_; }
  [[nodiscard]] const BatterySession& partial() const noexcept { return partial_; }

 private:
  std::string item_id_;
  BatterySession partial_;
};

/// Shuffle and Invert apply to item order and to the scale direction
/// respectively. `resume` continues a partial session from its cursor.
[[nodiscard]] BatterySession administer_hexaco(const persona::PersonaRecord& rec, const Inventory& inv,
                                               const Templates& t, provider::Provider& p, const Controls& controls,
                                               const BatterySession* resume = nullptr);

/// Off-range or unparseable choices are retried by the provider; items still
/// failing after the budget are recorded unanswered.
[[nodiscard]] BatterySession administer_sjt(const persona::PersonaRecord& rec, const std::vector<sjt::SJTItem>& items,
                                            const std::string& bank_id, const Templates& t, provider::Provider& p,
                                            const Controls& controls, const BatterySession* resume = nullptr);

[[nodiscard]] Json likert_schema();
[[nodiscard]] Json choice_schema();

}  // namespace psychoforge::battery
