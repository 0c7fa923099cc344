#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <set>

#include "psychoforge/battery.hpp"
#include "psychoforge/hashing.hpp"
#include "psychoforge/rng.hpp"
#include "psychoforge/text.hpp"

namespace psychoforge::battery {

void Inventory::check() const {
  if (items.size() != kInventorySize) {
    fail(ErrorCode::InvalidArgument, "inventory has " + std::to_string(items.size()) + " items, expected 100");
  }
  PerTrait<std::size_t> per{};
  std::size_t inter = 0;
  std::set<int> ids;
  for (const auto& it : items) {
    if (it.item_id < 1 || it.item_id > static_cast<int>(kInventorySize) || !ids.insert(it.item_id).second) {
      fail(ErrorCode::InvalidArgument, "inventory item id " + std::to_string(it.item_id) + " is out of range or repeated");
    }
    if (it.domain) {
      ++per[index(*it.domain)];
    } else {
      ++inter;
    }
  }
  for (Trait t : kTraits) {
    if (per[index(t)] != kItemsPerDomain) {
      fail(ErrorCode::InvalidArgument, "inventory has " + std::to_string(per[index(t)]) + " items for " +
                                           std::string(display_name(t)) + ", expected 16");
    }
  }
  if (inter != kInterstitialItems) fail(ErrorCode::InvalidArgument, "inventory needs 4 interstitial items");
}

const InventoryItem& Inventory::item(int item_id) const {
  for (const auto& it : items) {
    if (it.item_id == item_id) return it;
  }
  fail(ErrorCode::MissingItems, "inventory has no item " + std::to_string(item_id));
}

Inventory Inventory::load_tsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot read inventory: " + path.string());
  Inventory inv;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty()) continue;
    const auto cols = text::split(line, '\t');
    if (lineno == 1) {
      if (cols.size() != 4 || cols[0] != "item_id" || cols[1] != "domain" || cols[2] != "reverse_keyed" ||
          cols[3] != "text") {
        fail(ErrorCode::Parse, path.string() + ": header must be item_id, domain, reverse_keyed, text");
      }
      continue;
    }
    if (cols.size() != 4) fail(ErrorCode::Parse, path.string() + ":" + std::to_string(lineno) + ": expected 4 columns");
    InventoryItem it;
    try {
      it.item_id = std::stoi(cols[0]);
    } catch (const std::exception&) {
      fail(ErrorCode::Parse, path.string() + ":" + std::to_string(lineno) + ": bad item_id");
    }
    if (text::label_key(cols[1]) != "interstitial") {
      it.domain = parse_trait(cols[1]);
      if (!it.domain) fail(ErrorCode::Parse, path.string() + ":" + std::to_string(lineno) + ": unknown domain " + cols[1]);
    }
    const auto rk = text::lower_ascii(text::trim(cols[2]));
    if (rk == "1" || rk == "true" || rk == "r") {
      it.reverse_keyed = true;
    } else if (rk != "0" && rk != "false" && !rk.empty()) {
      fail(ErrorCode::Parse, path.string() + ":" + std::to_string(lineno) + ": bad reverse_keyed flag");
    }
    it.text = cols[3];
    inv.items.push_back(std::move(it));
  }
  inv.check();
  return inv;
}

int likert_value(std::string_view label) {
  for (std::size_t i = 0; i < kLikertLabels.size(); ++i) {
    if (kLikertLabels[i] == label) return static_cast<int>(i) + 1;
  }
  const auto k = text::label_key(label);
  for (std::size_t i = 0; i < kLikertLabels.size(); ++i) {
    if (text::label_key(kLikertLabels[i]) == k) return static_cast<int>(i) + 1;
  }
  fail(ErrorCode::InvalidArgument, "not a Likert label: " + std::string(label));
}

std::string_view to_string(Control c) noexcept {
  switch (c) {
    case Control::Fixed: return "fixed";
    case Control::Shuffle: return "shuffle";
    case Control::Invert: return "invert";
  }
  return "fixed";
}

Control parse_control(std::string_view s) {
  if (s == "fixed") return Control::Fixed;
  if (s == "shuffle") return Control::Shuffle;
  if (s == "invert") return Control::Invert;
  fail(ErrorCode::Config, "unknown presentation control: " + std::string(s));
}

Trait PresentationRecord::label_to_trait(int label) const {
  if (label < 1 || label > static_cast<int>(kTraitCount)) {
    fail(ErrorCode::InvalidArgument, "option label " + std::to_string(label) + " out of range");
  }
  return displayed_order[static_cast<std::size_t>(label - 1)];
}

int PresentationRecord::trait_to_label(Trait t) const {
  for (std::size_t k = 0; k < kTraitCount; ++k) {
    if (displayed_order[k] == t) return static_cast<int>(k) + 1;
  }
  fail(ErrorCode::InvariantViolation, "presentation of " + item_id + " omits a trait");
}

bool PresentationRecord::is_bijection() const {
  PerTrait<bool> seen{};
  for (Trait t : displayed_order) {
    if (seen[index(t)]) return false;
    seen[index(t)] = true;
  }
  return true;
}

PresentationRecord present(const std::string& item_id, Control c, std::uint64_t seed, const std::string& persona_id) {
  PresentationRecord r;
  r.item_id = item_id;
  r.displayed_order = kTraits;
  if (c == Control::Invert) {
    for (std::size_t k = 0; k < kTraitCount; ++k) r.displayed_order[k] = kTraits[kTraitCount - 1 - k];
  } else if (c == Control::Shuffle) {
    std::vector<Trait> order(kTraits.begin(), kTraits.end());
    Rng rng(derive_seed(seed, "present:" + persona_id + "|" + item_id));
    rng.shuffle(order);
    for (std::size_t k = 0; k < kTraitCount; ++k) r.displayed_order[k] = order[k];
  }
  return r;
}

std::string iso8601_utc(std::int64_t epoch_seconds) {
  const auto t = static_cast<std::time_t>(epoch_seconds);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02dZ", tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday,
                tm.tm_hour, tm.tm_min, tm.tm_sec);
  return buf;
}

Clock fixed_clock(std::string stamp) {
  return [s = std::move(stamp)] { return s; };
}

Clock default_clock() {
  if (const char* e = std::getenv("SOURCE_DATE_EPOCH"); e != nullptr && *e != '\0') {
    try {
      return fixed_clock(iso8601_utc(std::stoll(e)));
    } catch (const std::exception&) {
      fail(ErrorCode::Config, std::string("SOURCE_DATE_EPOCH is not an integer: ") + e);
    }
  }
  return [] {
    const auto now = std::chrono::system_clock::now();
    return iso8601_utc(std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch()).count());
  };
}

std::string BatterySession::instrument_name() const {
  return instrument == Instrument::Hexaco100 ? std::string("hexaco100") : "sjt:" + bank_id;
}

Json BatterySession::to_json() const {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["persona_id"] = persona_id;
  j["instrument"] = instrument == Instrument::Hexaco100 ? "hexaco100" : "sjt";
  if (instrument == Instrument::SjtSet) j["bank_id"] = bank_id;
  j["model_name"] = model_name;
  j["control"] = std::string(to_string(control));
  j["seed"] = seed;
  j["conditioning"] = conditioning;
  Json responses = Json::array();
  if (instrument == Instrument::Hexaco100) {
    for (const auto& r : likert) {
      responses.push_back(Json{{"item_id", r.item_id}, {"value", r.value}, {"position", r.position}});
    }
  } else {
    for (const auto& r : sjt) {
      responses.push_back(Json{{"item_id", r.item_id},
                               {"label", r.label ? Json(*r.label) : Json(nullptr)},
                               {"trait", r.trait ? Json(std::string(letter(*r.trait))) : Json(nullptr)},
                               {"answered", r.answered()}});
    }
  }
  j["responses"] = responses;
  Json pres = Json::array();
  for (const auto& p : presentation) {
    Json order = Json::array();
    for (Trait t : p.displayed_order) order.push_back(std::string(letter(t)));
    pres.push_back(Json{{"item_id", p.item_id}, {"displayed_order", order}});
  }
  j["presentation"] = pres;
  j["cursor"] = cursor;
  j["complete"] = complete;
  j["started_at"] = started_at;
  j["finished_at"] = finished_at;
  return j;
}

BatterySession BatterySession::from_json(const Json& j) {
  BatterySession s;
  try {
    s.persona_id = j.at("persona_id").get<std::string>();
    const auto inst = j.at("instrument").get<std::string>();
    if (inst == "hexaco100") {
      s.instrument = Instrument::Hexaco100;
    } else if (inst == "sjt") {
      s.instrument = Instrument::SjtSet;
      s.bank_id = j.value("bank_id", "");
    } else {
      fail(ErrorCode::Parse, "unknown instrument: " + inst);
    }
    s.model_name = j.value("model_name", "");
    s.control = parse_control(j.value("control", std::string("fixed")));
    s.seed = j.value("seed", std::uint64_t{0});
    s.conditioning = j.value("conditioning", "");
    for (const auto& r : j.at("responses")) {
      if (s.instrument == Instrument::Hexaco100) {
        s.likert.push_back({r.at("item_id").get<int>(), r.at("value").get<int>(), r.value("position", 0)});
      } else {
        SjtResponse resp;
        resp.item_id = r.at("item_id").get<std::string>();
        if (r.contains("label") && r["label"].is_number_integer()) resp.label = r["label"].get<int>();
        if (r.contains("trait") && r["trait"].is_string()) {
          resp.trait = parse_trait(r["trait"].get<std::string>());
          if (!resp.trait) fail(ErrorCode::Parse, "unknown trait in session response");
        }
        s.sjt.push_back(std::move(resp));
      }
    }
    for (const auto& p : j.value("presentation", Json::array())) {
      PresentationRecord rec;
      rec.item_id = p.at("item_id").get<std::string>();
      const auto& order = p.at("displayed_order");
      if (order.size() != kTraitCount) fail(ErrorCode::Parse, "presentation order must list six traits");
      for (std::size_t k = 0; k < kTraitCount; ++k) {
        const auto t = parse_trait(order[k].get<std::string>());
        if (!t) fail(ErrorCode::Parse, "unknown trait in presentation order");
        rec.displayed_order[k] = *t;
      }
      if (!rec.is_bijection()) fail(ErrorCode::Parse, "presentation of " + rec.item_id + " is not a bijection");
      s.presentation.push_back(std::move(rec));
    }
    s.cursor = j.value("cursor", std::size_t{0});
    s.complete = j.value("complete", false);
    s.started_at = j.value("started_at", "");
    s.finished_at = j.value("finished_at", "");
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Parse, std::string("session: ") + e.what());
  }
  for (const auto& r : s.likert) {
    if (r.value < 1 || r.value > 5) fail(ErrorCode::Parse, "Likert value out of [1,5]");
  }
  return s;
}

std::vector<BatterySession> load_sessions(const std::filesystem::path& path) {
  const auto rows = jsonl::read(path);
  if (!rows.empty()) (void)jsonl::check_schema_version(rows, path);
  std::vector<BatterySession> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(BatterySession::from_json(r));
  return out;
}

void save_sessions(const std::filesystem::path& path, const std::vector<BatterySession>& sessions) {
  std::vector<Json> rows;
  rows.reserve(sessions.size());
  for (const auto& s : sessions) rows.push_back(s.to_json());
  jsonl::write(path, rows);
}

Templates Templates::load(const std::filesystem::path& dir) {
  Templates t;
  t.system_template = text::read_file(dir / "administer_system.txt");
  t.hexaco_template = text::read_file(dir / "administer_hexaco.txt");
  t.sjt_template = text::read_file(dir / "administer_sjt.txt");
  return t;
}

}  // namespace psychoforge::battery
