#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include "psychoforge/scoring.hpp"
#include "psychoforge/text.hpp"

namespace psychoforge::scoring {

std::vector<battery::LikertResponse> apply_keying(const std::vector<battery::LikertResponse>& responses,
                                                  const battery::Inventory& inv) {
  std::vector<battery::LikertResponse> out = responses;
  for (auto& r : out) {
    if (inv.item(r.item_id).reverse_keyed) r.value = reverse_key(r.value);
  }
  return out;
}

PerTrait<double> score_hexaco(const battery::BatterySession& session, const battery::Inventory& inv) {
  if (session.instrument != battery::Instrument::Hexaco100) {
    fail(ErrorCode::InvalidArgument, "session for " + session.persona_id + " is not a HEXACO-100 session");
  }
  std::set<int> seen;
  for (const auto& r : session.likert) {
    if (r.value < 1 || r.value > 5) fail(ErrorCode::InvalidArgument, "Likert value out of [1,5]");
    if (!seen.insert(r.item_id).second) {
      fail(ErrorCode::InvalidArgument, "item " + std::to_string(r.item_id) + " answered twice");
    }
  }
  std::vector<std::string> missing;
  for (const auto& it : inv.items) {
    if (seen.count(it.item_id) == 0) missing.push_back(std::to_string(it.item_id));
  }
  if (!missing.empty()) {
    fail(ErrorCode::MissingItems,
         "session for " + session.persona_id + " is missing items: " + text::join(missing, ", "));
  }
  PerTrait<double> sum{};
  PerTrait<int> count{};
  for (const auto& r : apply_keying(session.likert, inv)) {
    const auto& item = inv.item(r.item_id);
    if (!item.domain) continue;
    sum[index(*item.domain)] += r.value;
    ++count[index(*item.domain)];
  }
  PerTrait<double> means{};
  for (Trait t : kTraits) {
    if (count[index(t)] == 0) fail(ErrorCode::MissingItems, "no items for " + std::string(display_name(t)));
    means[index(t)] = sum[index(t)] / count[index(t)];
  }
  return means;
}

PopulationStats PopulationStats::from_scores(const std::vector<PerTrait<double>>& rows) {
  if (rows.empty()) fail(ErrorCode::EmptySequence, "population statistics need at least one persona");
  PopulationStats pop;
  pop.n = rows.size();
  for (Trait t : kTraits) {
    std::vector<double> col;
    col.reserve(rows.size());
    for (const auto& r : rows) col.push_back(r[index(t)]);
    pop.mean[index(t)] = stats::mean(col);
    pop.sd[index(t)] = stats::population_sd(col);
  }
  return pop;
}

PopulationStats PopulationStats::load_tsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot read population stats: " + path.string());
  PopulationStats pop;
  PerTrait<bool> seen{};
  std::string line;
  while (std::getline(in, line)) {
    line = text::trim(line);
    if (line.empty()) continue;
    if (line.front() == '#') {
      const auto at = line.find("n=");
      if (at != std::string::npos) pop.n = static_cast<std::size_t>(std::stoul(line.substr(at + 2)));
      continue;
    }
    const auto cols = text::split(line, '\t');
    if (cols.size() != 3) fail(ErrorCode::Parse, path.string() + ": expected trait, mean, sd");
    const auto t = parse_trait(cols[0]);
    if (!t) {
      if (text::lower_ascii(cols[0]) == "trait") continue;
      fail(ErrorCode::Parse, path.string() + ": unknown trait " + cols[0]);
    }
    try {
      pop.mean[index(*t)] = std::stod(cols[1]);
      pop.sd[index(*t)] = std::stod(cols[2]);
    } catch (const std::exception&) {
      fail(ErrorCode::Parse, path.string() + ": bad number for " + cols[0]);
    }
    if (pop.sd[index(*t)] < 0.0) fail(ErrorCode::Parse, path.string() + ": negative sd for " + cols[0]);
    seen[index(*t)] = true;
  }
  for (Trait t : kTraits) {
    if (!seen[index(t)]) fail(ErrorCode::Parse, path.string() + ": no row for " + std::string(display_name(t)));
  }
  return pop;
}

Json PopulationStats::to_json() const {
  Json j;
  j["n"] = n;
  Json per;
  for (Trait t : kTraits) per[std::string(key(t))] = Json{{"mean", mean[index(t)]}, {"sd", sd[index(t)]}};
  j["traits"] = per;
  return j;
}

PerTrait<TraitZ> zscore(const PerTrait<double>& means, const PopulationStats& pop) {
  PerTrait<TraitZ> out{};
  for (Trait t : kTraits) {
    const double sd = pop.sd[index(t)];
    if (!(sd > 0.0)) {
      out[index(t)].error = "population sd is zero for " + std::string(display_name(t));
      continue;
    }
    out[index(t)].z = (means[index(t)] - pop.mean[index(t)]) / sd;
  }
  return out;
}

void LevelBins::check() const {
  if (edges.empty() || edges.size() != stems.size()) {
    fail(ErrorCode::Config, "level bins need one stem per edge");
  }
  if (!(edges.front() > 0.0)) fail(ErrorCode::Config, "level bin edges must be positive");
  for (std::size_t i = 1; i < edges.size(); ++i) {
    if (!(edges[i] > edges[i - 1])) fail(ErrorCode::Config, "level bin edges must increase");
  }
}

std::string relative_level(double z, const LevelBins& bins) {
  bins.check();
  if (!std::isfinite(z)) fail(ErrorCode::NonFinite, "relative_level: z is not finite");
  const double a = std::abs(z);
  if (a < bins.edges.front()) return "Average";
  std::size_t k = 0;
  while (k + 1 < bins.edges.size() && a >= bins.edges[k + 1]) ++k;
  const std::string dir = z > 0 ? "High" : "Low";
  return bins.stems[k].empty() ? dir : bins.stems[k] + " " + dir;
}

Json HexacoScores::to_json() const {
  Json j;
  j["persona_id"] = persona_id;
  Json per;
  for (Trait t : kTraits) {
    Json row;
    row["mean"] = mean[index(t)];
    const auto& tz = z[index(t)];
    row["z"] = tz.z ? Json(*tz.z) : Json(nullptr);
    row["relative_level"] = level[index(t)].empty() ? Json(nullptr) : Json(level[index(t)]);
    if (!tz.error.empty()) row["error"] = tz.error;
    per[std::string(key(t))] = row;
  }
  j["traits"] = per;
  return j;
}

HexacoScores make_scores(std::string persona_id, const PerTrait<double>& means, const PopulationStats& pop,
                         const LevelBins& bins) {
  HexacoScores s;
  s.persona_id = std::move(persona_id);
  s.mean = means;
  s.z = zscore(means, pop);
  for (Trait t : kTraits) {
    if (s.z[index(t)].z) s.level[index(t)] = relative_level(*s.z[index(t)].z, bins);
  }
  return s;
}

Json TraitProportions::to_json() const {
  Json j;
  j["answered"] = answered;
  j["unanswered"] = unanswered;
  Json per;
  for (Trait t : kTraits) per[std::string(key(t))] = Json{{"count", counts[index(t)]}, {"fraction", fraction[index(t)]}};
  j["traits"] = per;
  return j;
}

TraitProportions proportions_from_counts(const PerTrait<std::size_t>& counts, std::size_t unanswered) {
  TraitProportions p;
  p.counts = counts;
  p.unanswered = unanswered;
  p.answered = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
  if (p.answered == 0) fail(ErrorCode::ZeroAnswered, "no answered SJT items");
  for (Trait t : kTraits) {
    p.fraction[index(t)] = static_cast<double>(counts[index(t)]) / static_cast<double>(p.answered);
  }
  return p;
}

TraitProportions trait_proportions(const battery::BatterySession& session) {
  if (session.instrument != battery::Instrument::SjtSet) {
    fail(ErrorCode::InvalidArgument, "session for " + session.persona_id + " is not an SJT session");
  }
  PerTrait<std::size_t> counts{};
  std::size_t unanswered = 0;
  for (const auto& r : session.sjt) {
    if (r.answered()) {
      ++counts[index(*r.trait)];
    } else {
      ++unanswered;
    }
  }
  if (std::accumulate(counts.begin(), counts.end(), std::size_t{0}) == 0) {
    fail(ErrorCode::ZeroAnswered, "session for " + session.persona_id + " has no answered SJT items");
  }
  return proportions_from_counts(counts, unanswered);
}

PerTrait<int> descending_ranks(const PerTrait<double>& values) {
  std::array<std::size_t, kTraitCount> order{};
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
  PerTrait<int> ranks{};
  for (std::size_t r = 0; r < kTraitCount; ++r) ranks[order[r]] = static_cast<int>(r) + 1;
  return ranks;
}

PerTrait<std::string> rank_difference_rule(const PerTrait<double>& z, const PerTrait<double>& props) {
  const auto rz = descending_ranks(z);
  const auto rp = descending_ranks(props);
  PerTrait<std::string> out{};
  for (std::size_t i = 0; i < kTraitCount; ++i) {
    switch (std::abs(rz[i] - rp[i])) {
      case 0: out[i] = "Strong alignment"; break;
      case 1: out[i] = "Alignment"; break;
      case 2: out[i] = "Moderate alignment"; break;
      default: out[i] = "Weak alignment"; break;
    }
  }
  return out;
}

std::vector<AlignmentRow> alignment_labels(const HexacoScores& scores, const TraitProportions& props,
                                           const AlignmentRule& rule) {
  PerTrait<double> z{};
  for (Trait t : kTraits) z[index(t)] = scores.z[index(t)].z.value_or(0.0);
  const auto labels = rule(z, props.fraction);
  std::vector<AlignmentRow> rows;
  for (Trait t : kTraits) {
    AlignmentRow r;
    r.trait = t;
    r.z = scores.z[index(t)].z;
    r.relative_level = scores.level[index(t)];
    r.sjt_percent = props.answered > 0 ? 100.0 * static_cast<double>(props.counts[index(t)]) /
                                             static_cast<double>(props.answered)
                                       : 100.0 * props.fraction[index(t)];
    r.alignment_label = labels[index(t)];
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace psychoforge::scoring
