#include <algorithm>
#include <array>
#include <cmath>

#include "psychoforge/error.hpp"
#include "psychoforge/hashing.hpp"
#include "psychoforge/provider.hpp"
#include "psychoforge/rng.hpp"
#include "psychoforge/text.hpp"
#include "psychoforge/traits.hpp"

namespace psychoforge::provider {
namespace {

constexpr std::array<std::string_view, 96> kWords = {
    "the",      "officer",  "walked",   "past",     "a",        "quiet",    "row",      "of",       "shuttered",
    "shops",    "while",    "rain",     "pooled",   "under",    "amber",    "lights",   "and",      "radio",
    "traffic",  "crackled", "with",     "routine",  "calls",    "she",      "he",       "noticed",  "small",
    "details",  "like",     "fresh",    "tire",     "marks",    "near",     "curb",     "steady",   "breathing",
    "before",   "speaking", "to",       "neighbors", "who",     "gathered", "on",       "porch",    "steps",
    "asking",   "patient",  "questions", "about",   "what",     "they",     "heard",    "earlier",  "that",
    "evening",  "writing",  "careful",  "notes",    "in",       "worn",     "notebook", "folded",   "inside",
    "jacket",   "pocket",   "later",    "reviewing", "camera",  "footage",  "at",       "station",  "desk",
    "coffee",   "gone",     "cold",     "partner",  "joked",    "softly",   "then",     "drove",    "back",
    "along",    "river",    "road",     "toward",   "dim",      "warehouse", "district", "where",   "old",
    "friends",  "once",     "worked",   "long",     "shifts",   "together"};

constexpr std::array<std::string_view, 6> kRefinements = {
    "and explains the reasoning openly to those affected.",
    "while keeping a written record of each step taken.",
    "after checking in with the people present about their concerns.",
    "and invites a colleague to weigh in on a fresh approach.",
    "while staying composed and aware of the risks involved.",
    "and takes visible initiative to move the situation forward."};

constexpr std::array<std::string_view, 4> kClosings = {
    " The decision must account for everyone present.",
    " How events unfold depends on the next few choices.",
    " Several people are watching how you respond.",
    " The outcome will be reviewed by your supervisor."};

std::string words(Rng& rng, std::size_t n) {
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    if (i) out.push_back(' ');
    out += kWords[rng.below(kWords.size())];
  }
  if (!out.empty()) {
    out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
    out.push_back('.');
  }
  return out;
}

Rng request_rng(const StructuredRequest& req, const Json& params, std::string_view purpose) {
  std::string salt = params.is_object() && params.contains("salt") ? params["salt"].dump() : "";
  return Rng(derive_seed(derive_seed(fnv1a64(req.request_tag), "sample:" + std::to_string(req.sample_index) + salt),
                         purpose));
}

std::pair<std::size_t, std::size_t> word_range(const Json& params, const std::string& field) {
  if (params.is_object() && params.contains("words") && params["words"].contains(field)) {
    const auto& r = params["words"][field];
    return {r[0].get<std::size_t>(), r[1].get<std::size_t>()};
  }
  return {6, 14};
}

Json fill(const Json& schema, const std::string& name, Rng& rng, const Json& params) {
  if (params.is_object() && params.contains("overrides") && params["overrides"].contains(name)) {
    return params["overrides"][name];
  }
  if (!schema.is_object()) return nullptr;
  if (schema.contains("const")) return schema["const"];
  if (schema.contains("enum")) {
    const auto& e = schema["enum"];
    return e[rng.below(e.size())];
  }
  std::string type = "object";
  if (schema.contains("type")) {
    const auto& t = schema["type"];
    type = t.is_array() ? t[0].get<std::string>() : t.get<std::string>();
  }
  if (type == "object") {
    Json o = Json::object();
    if (schema.contains("properties")) {
      for (const auto& [k, sub] : schema["properties"].items()) o[k] = fill(sub, k, rng, params);
    }
    return o;
  }
  if (type == "array") {
    const std::size_t lo = schema.value("minItems", 0);
    std::size_t n = 0;
    if (lo > 0) {
      const std::size_t hi = std::min<std::size_t>(schema.value("maxItems", lo + 3), lo + 3);
      n = lo + static_cast<std::size_t>(rng.below(hi - lo + 1));
    }
    Json a = Json::array();
    for (std::size_t i = 0; i < n; ++i) a.push_back(fill(schema.value("items", Json::object()), name, rng, params));
    return a;
  }
  if (type == "integer") {
    auto lo = static_cast<std::int64_t>(schema.value("minimum", 0.0));
    auto hi = static_cast<std::int64_t>(schema.value("maximum", 100.0));
    if (params.is_object() && params.contains("int_range")) {
      lo = std::max(lo, params["int_range"][0].get<std::int64_t>());
      hi = std::min(hi, params["int_range"][1].get<std::int64_t>());
    }
    return rng.between(lo, hi);
  }
  if (type == "number") {
    const double lo = schema.value("minimum", 0.0);
    const double hi = schema.value("maximum", 1.0);
    return std::round((lo + (hi - lo) * rng.uniform01()) * 100.0) / 100.0;
  }
  if (type == "boolean") return rng.below(2) == 1;
  if (type == "null") return nullptr;
  const auto [wlo, whi] = word_range(params, name);
  return words(rng, wlo + static_cast<std::size_t>(rng.below(whi - wlo + 1)));
}

Json require_context(const StructuredRequest& req, const char* field, const std::string& generator) {
  if (!req.context.is_object() || !req.context.contains(field)) {
    fail(ErrorCode::InvalidArgument, "mock generator '" + generator + "' needs context." + field + " on request '" +
                                         req.request_tag + "'");
  }
  return req.context[field];
}

// Variant of a drafted SJT: appends a seeded closing line and a clause per option.
Json draft_variant(const StructuredRequest& req, const Json& params) {
  Json draft = require_context(req, "draft", "draft_variant");
  Rng rng = request_rng(req, params, "draft_variant");
  Json out = draft;
  std::string q = draft.value("question", "");
  if (req.context.contains("seed_values")) {
    const auto& s = req.context["seed_values"];
    auto v = [&](const char* k) { return s.contains(k) ? s[k].get<std::string>() : std::string("Unknown"); };
    q += " It is " + v("time_of_day") + " and the person involved is described as " + v("age") + ", " + v("race") +
         ", " + v("gender") + "; the setting is " + v("situation_type") + ".";
  }
  q += kClosings[rng.below(kClosings.size())];
  out["question"] = q;
  for (Trait t : kTraits) {
    const auto k = option_key(t);
    if (out.contains(k) && out[k].is_string() && rng.below(2) == 1) {
      std::string s = out[k].get<std::string>();
      out[k] = s + " You stay mindful of the people around you.";
    }
  }
  return out;
}

Json trait_bleed(const StructuredRequest& req, const Json& params) {
  const Json item = require_context(req, "item", "trait_bleed");
  const double fail_rate = params.value("fail_rate", 0.25);
  const int clean_after = params.value("clean_after", 1);
  const int low_score = params.value("low_score", 4);
  Rng rng = request_rng(req, params, "trait_bleed");
  Json report;
  report["scenario_summary"] = words(rng, 16);
  Json evals = Json::object();
  Json corrected;
  corrected["question"] = item.value("question", "");
  for (Trait t : kTraits) {
    const auto ok = option_key(t);
    const std::string original = item.value(ok, "");
    const bool bleed = req.sample_index < clean_after && rng.uniform01() < fail_rate;
    Json e;
    e["score"] = bleed ? low_score : 5;
    e["analysis"] = words(rng, 12);
    if (bleed) {
      const std::string fix = original + " " + std::string(kRefinements[index(t)]);
      e["suggested_correction"] = fix;
      corrected[ok] = fix;
    } else {
      e["suggested_correction"] = nullptr;
      corrected[ok] = original;
    }
    evals[std::string(key(t))] = e;
  }
  report["trait_evaluations"] = evals;
  report["corrected_sjt"] = corrected;
  report["overall_notes"] = words(rng, 14);
  return report;
}

std::string lower(std::string s) { return text::lower_ascii(s); }

// Reverse inference over the visible text: the first domain label found in
// the text wins, otherwise a seeded guess or Unknown.
Json rubric2(const StructuredRequest& req, const Json& params) {
  const Json domains = require_context(req, "domains", "rubric2");
  const std::string hay = " " + lower(require_context(req, "text", "rubric2").get<std::string>());
  const double trait_accuracy = params.value("trait_accuracy", 0.9);
  Rng rng = request_rng(req, params, "rubric2");
  Json out;
  for (const auto& [attr, labels] : domains.items()) {
    std::string value = "Unknown";
    double conf = 0.3;
    std::size_t best_len = 0;
    for (const auto& l : labels) {
      const auto label = l.get<std::string>();
      if (label == "Unknown") continue;
      if (hay.find(" " + lower(label)) != std::string::npos && label.size() > best_len) {
        best_len = label.size();
        value = label;
        conf = 0.9;
      }
    }
    if (best_len == 0 && !labels.empty() && rng.uniform01() < 0.5) {
      value = labels[rng.below(labels.size())].get<std::string>();
      conf = 0.4;
    }
    out[attr] = Json{{"value", value}, {"confidence", conf}, {"justification", words(rng, 8)}};
  }
  static constexpr std::array<std::string_view, 6> kOrdinals = {"first_option",  "second_option", "third_option",
                                                                "fourth_option", "fifth_option",  "sixth_option"};
  Json traits = Json::object();
  for (std::size_t i = 0; i < kTraitCount; ++i) {
    Trait primary = kTraits[i];
    if (rng.uniform01() >= trait_accuracy) primary = kTraits[rng.below(kTraitCount)];
    Json values = Json::object();
    if (rng.below(3) == 0) {
      Trait secondary = kTraits[(index(primary) + 1 + rng.below(kTraitCount - 1)) % kTraitCount];
      values[std::string(key(primary))] = 0.7;
      values[std::string(key(secondary))] = 0.3;
    } else {
      values[std::string(key(primary))] = 1.0;
    }
    traits[std::string(kOrdinals[i])] =
        Json{{"values", values}, {"confidence", 0.8}, {"justification", words(rng, 8)}};
  }
  out["hexaco_traits"] = traits;
  out["rubric_quality"] = Json{{"value", "High"}, {"confidence", 0.8}, {"justification", words(rng, 8)}};
  return out;
}

Json choose_by_content(const StructuredRequest& req, const Json& params) {
  const Json options = require_context(req, "options", "choose_by_content");
  Rng rng = request_rng(req, params, "choose_by_content");
  Json out = fill(req.output_schema, "", rng, params);
  std::string salt = params.value("salt", std::string("content"));
  // Mixing in the system text lets choices differ between personas while
  // staying independent of option position.
  if (params.value("mix_system", false)) salt += "|" + std::to_string(fnv1a64(req.system_text));
  std::uint64_t best = UINT64_MAX;
  Json choice;
  for (const auto& o : options) {
    const auto h = fnv1a64(salt + "|" + o.at("text").get<std::string>());
    if (h < best) {
      best = h;
      choice = o.at("label");
    }
  }
  out[params.value("field", std::string("choice"))] = choice;
  return out;
}

RawCompletion from_entry(const Json& entry, const StructuredRequest& req) {
  RawCompletion r;
  if (entry.contains("payload")) {
    r.content = entry["payload"].dump();
  } else if (entry.contains("raw")) {
    r.content = entry["raw"].get<std::string>();
  } else if (entry.contains("generator")) {
    r.content = run_generator(entry["generator"].get<std::string>(), entry.value("params", Json::object()), req).dump();
  } else if (entry.contains("error")) {
    const int status = entry["error"].get<int>();
    r.http_status = status;
    r.error = entry.value("message", std::string("scripted failure"));
    if (status == 0) {
      r.status = RawCompletion::Status::Transport;
    } else if (status == 429) {
      r.status = RawCompletion::Status::RateLimited;
    } else if (status == 401 || status == 403) {
      r.status = RawCompletion::Status::Unauthorized;
    } else if (status >= 500) {
      r.status = RawCompletion::Status::ServerError;
    } else {
      r.status = RawCompletion::Status::ClientError;
    }
  } else {
    fail(ErrorCode::Config, "mock response entry needs payload, raw, generator or error");
  }
  return r;
}

}  // namespace

Json run_generator(const std::string& name, const Json& params, const StructuredRequest& req) {
  if (name == "schema_fill") {
    Rng rng = request_rng(req, params, "schema_fill");
    return fill(req.output_schema, "", rng, params);
  }
  if (name == "draft_variant") return draft_variant(req, params);
  if (name == "trait_bleed") return trait_bleed(req, params);
  if (name == "rubric2") return rubric2(req, params);
  if (name == "choose_by_content") return choose_by_content(req, params);
  if (name == "echo") {
    if (params.contains("payload")) return params["payload"];
    return require_context(req, "payload", "echo");
  }
  fail(ErrorCode::Config, "unknown mock generator '" + name + "'");
}

MockBackend::MockBackend(Json script) : script_(std::move(script)) {
  if (!script_.is_object() || !script_.contains("rules") || !script_["rules"].is_array()) {
    fail(ErrorCode::Config, "mock script needs a 'rules' array");
  }
  for (const auto& r : script_["rules"]) {
    if (!r.contains("match") || !r["match"].is_string()) fail(ErrorCode::Config, "mock rule without 'match'");
    if (!r.contains("responses") && !r.contains("generator")) {
      fail(ErrorCode::Config, "mock rule '" + r["match"].get<std::string>() + "' needs responses or generator");
    }
  }
  if (script_.contains("embedding")) dimension_ = script_["embedding"].value("dimension", dimension_);
  digest_ = sha256_hex(script_.dump()).substr(0, 16);
}

std::shared_ptr<MockBackend> MockBackend::from_file(const std::filesystem::path& path) {
  try {
    return std::make_shared<MockBackend>(Json::parse(text::read_file(path)));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Config, "mock script " + path.string() + ": " + e.what());
  }
}

std::string MockBackend::identity() const { return "mock:" + digest_; }

std::size_t MockBackend::calls_for(const std::string& tag) const {
  std::lock_guard lock(mu_);
  auto it = counters_.find(tag);
  return it == counters_.end() ? 0 : it->second;
}

RawCompletion MockBackend::complete(const StructuredRequest& req, const ProviderConfig&, const Sampling&) {
  for (const auto& rule : script_["rules"]) {
    if (!text::glob_match(rule["match"].get<std::string>(), req.request_tag)) continue;
    std::size_t n = 0;
    {
      std::lock_guard lock(mu_);
      n = counters_[req.request_tag]++;
    }
    if (rule.contains("generator")) {
      RawCompletion r;
      r.content = run_generator(rule["generator"].get<std::string>(), rule.value("params", Json::object()), req).dump();
      return r;
    }
    const auto& responses = rule["responses"];
    if (responses.empty()) fail(ErrorCode::Config, "mock rule '" + rule["match"].get<std::string>() + "' has no responses");
    const std::string policy = rule.value("exhausted", std::string("repeat_last"));
    if (n >= responses.size()) {
      if (policy == "cycle") {
        n %= responses.size();
      } else if (policy == "error") {
        fail(ErrorCode::UnscriptedRequest, "mock script exhausted for request '" + req.request_tag + "'");
      } else {
        n = responses.size() - 1;
      }
    }
    return from_entry(responses[n], req);
  }
  fail(ErrorCode::UnscriptedRequest, "no mock rule matches request '" + req.request_tag + "'");
}

std::vector<std::vector<double>> MockBackend::embed(const std::vector<std::string>& texts, const ProviderConfig&) {
  std::vector<std::vector<double>> out;
  out.reserve(texts.size());
  for (const auto& t : texts) {
    Rng rng(derive_seed(fnv1a64(t), "embed:" + digest_));
    std::vector<double> v(dimension_);
    double norm = 0.0;
    for (auto& x : v) {
      x = rng.normal();
      norm += x * x;
    }
    norm = std::sqrt(norm);
    for (auto& x : v) x /= norm;
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace psychoforge::provider
