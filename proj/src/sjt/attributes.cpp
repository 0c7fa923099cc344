#include "psychoforge/error.hpp"
#include "psychoforge/sjt.hpp"
#include "psychoforge/text.hpp"

namespace psychoforge::sjt {

bool AttributeDomain::contains(std::string_view value) const {
  for (const auto& v : values) {
    if (v == value) return true;
  }
  return false;
}

std::optional<std::string> AttributeDomain::canonical(std::string_view label) const {
  const std::string trimmed = text::trim(label);
  if (contains(trimmed)) return trimmed;
  if (auto it = aliases.find(trimmed); it != aliases.end()) return it->second;
  const std::string k = text::label_key(trimmed);
  if (k == text::label_key(kUnknown)) return std::string(kUnknown);
  for (const auto& v : values) {
    if (text::label_key(v) == k) return v;
  }
  for (const auto& [alias, target] : aliases) {
    if (text::label_key(alias) == k) return target;
  }
  return std::nullopt;
}

std::vector<std::string> AttributeDomain::accepted_labels() const {
  std::vector<std::string> out = values;
  for (const auto& [alias, target] : aliases) {
    (void)target;
    out.push_back(alias);
  }
  if (!contains(kUnknown)) out.emplace_back(kUnknown);
  return out;
}

const AttributeDomain* AttributeDomains::find(std::string_view name) const {
  for (const auto& a : attributes) {
    if (a.name == name) return &a;
  }
  return nullptr;
}

const AttributeDomain& AttributeDomains::at(std::string_view name) const {
  if (const auto* a = find(name)) return *a;
  fail(ErrorCode::UnknownField, "unknown seed attribute: " + std::string(name));
}

AttributeDomains AttributeDomains::from_json(const Json& j) {
  AttributeDomains d;
  if (!j.is_object() || !j.contains("attributes") || !j["attributes"].is_array()) {
    fail(ErrorCode::Parse, "attribute domains: expected an 'attributes' array");
  }
  for (const auto& a : j["attributes"]) {
    AttributeDomain dom;
    dom.name = a.at("name").get<std::string>();
    dom.display = a.value("display", dom.name);
    dom.values = a.at("values").get<std::vector<std::string>>();
    if (a.contains("aliases")) {
      for (const auto& [k, v] : a["aliases"].items()) dom.aliases[k] = v.get<std::string>();
    }
    for (const auto& [alias, target] : dom.aliases) {
      if (!dom.contains(target)) fail(ErrorCode::Parse, "alias '" + alias + "' of " + dom.name + " names no value");
    }
    d.attributes.push_back(std::move(dom));
  }
  return d;
}

AttributeDomains AttributeDomains::load(const std::filesystem::path& path) {
  try {
    return from_json(Json::parse(text::read_file(path)));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Parse, path.string() + ": " + e.what());
  }
}

std::uint64_t seed_space_cardinality(const AttributeDomains& domains) {
  std::uint64_t n = 1;
  for (const auto& a : domains.attributes) {
    if (a.values.empty()) fail(ErrorCode::EmptyDomain, "attribute '" + a.name + "' has an empty domain");
    n *= a.values.size();
  }
  return n;
}

const std::string* SeedAttributes::find(std::string_view name) const {
  for (const auto& [k, v] : values) {
    if (k == name) return &v;
  }
  return nullptr;
}

const std::string& SeedAttributes::at(std::string_view name) const {
  if (const auto* v = find(name)) return *v;
  fail(ErrorCode::MissingField, "seed lacks attribute: " + std::string(name));
}

void SeedAttributes::set(const std::string& name, std::string value) {
  for (auto& [k, v] : values) {
    if (k == name) {
      v = std::move(value);
      return;
    }
  }
  values.emplace_back(name, std::move(value));
}

Json SeedAttributes::to_json() const {
  Json j = Json::object();
  for (const auto& [k, v] : values) j[k] = v;
  return j;
}

SeedAttributes SeedAttributes::from_json(const Json& j) {
  if (!j.is_object()) fail(ErrorCode::Parse, "seed attributes must be an object");
  SeedAttributes s;
  for (const auto& [k, v] : j.items()) s.values.emplace_back(k, v.get<std::string>());
  return s;
}

void validate_seed(const SeedAttributes& seed, const AttributeDomains& domains) {
  for (const auto& dom : domains.attributes) {
    const auto* v = seed.find(dom.name);
    if (v == nullptr) fail(ErrorCode::InvalidArgument, "seed lacks attribute " + dom.name);
    if (!dom.contains(*v)) fail(ErrorCode::InvalidArgument, "seed value '" + *v + "' outside domain of " + dom.name);
  }
}

std::string_view to_string(SeedSampling m) noexcept {
  return m == SeedSampling::Balanced ? "balanced" : "iid-uniform";
}

SeedSampling parse_seed_sampling(std::string_view s) {
  if (s == "balanced") return SeedSampling::Balanced;
  if (s == "iid-uniform" || s == "iid" || s == "uniform") return SeedSampling::IidUniform;
  fail(ErrorCode::Config, "unknown seed sampling mode: " + std::string(s));
}

std::vector<SeedAttributes> sample_seeds(const AttributeDomains& domains, std::size_t n, Rng& rng,
                                         SeedSampling mode) {
  if (n == 0) fail(ErrorCode::InvalidArgument, "sample_seeds: n must be >= 1");
  (void)seed_space_cardinality(domains);
  std::vector<SeedAttributes> out(n);
  for (const auto& dom : domains.attributes) {
    const std::size_t k = dom.values.size();
    std::vector<std::size_t> column(n);
    if (mode == SeedSampling::Balanced) {
      for (std::size_t i = 0; i < n; ++i) column[i] = i % k;
      Rng col = rng.child("balanced:" + dom.name);
      col.shuffle(column);
    } else {
      Rng col = rng.child("iid:" + dom.name);
      for (auto& c : column) c = static_cast<std::size_t>(col.below(k));
    }
    for (std::size_t i = 0; i < n; ++i) out[i].values.emplace_back(dom.name, dom.values[column[i]]);
  }
  return out;
}

}  // namespace psychoforge::sjt
