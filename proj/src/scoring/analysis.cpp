#include <algorithm>
#include <map>
#include <set>

#include "psychoforge/scoring.hpp"

namespace psychoforge::scoring {
namespace {

std::optional<std::string> persona_field(const persona::PersonaRecord& rec, const std::string& by) {
  const auto& d = rec.demographics;
  if (by == "archetype") return rec.archetype_name;
  if (by == "memoir") return rec.memoir_title;
  if (by == "appearance_category") return rec.appearance_category;
  if (by == "behavior_category") return rec.behavior_category;
  if (by == "sex") return d.sex;
  if (by == "age_group") return std::string(demography::to_string(d.age_group()));
  if (by == "education_level") return d.education_level;
  if (by == "ethnic_background") return d.ethnic_background;
  if (by == "marital_status") return d.marital_status;
  if (by == "state") return d.state();
  return std::nullopt;
}

Slice finish_slice(std::string value, std::size_t personas, const PerTrait<std::size_t>& counts,
                   std::size_t unanswered) {
  Slice s;
  s.value = std::move(value);
  s.personas = personas;
  s.props = proportions_from_counts(counts, unanswered);
  metrics::CategoricalCounts cc;
  for (Trait t : kTraits) {
    if (counts[index(t)] > 0) cc.counts[std::string(key(t))] = counts[index(t)];
  }
  s.shannon = metrics::shannon_index(cc);
  s.inverse_simpson = metrics::simpson_indices(cc).inverse_simpson;
  return s;
}

}  // namespace

Population build_population(const std::vector<battery::BatterySession>& hexaco_sessions,
                            const std::vector<battery::BatterySession>& sjt_sessions, const battery::Inventory& inv,
                            const std::vector<persona::PersonaRecord>& personas, const std::vector<sjt::SJTItem>& bank) {
  std::map<std::string, const battery::BatterySession*> sjt_by_id;
  for (const auto& s : sjt_sessions) {
    if (!sjt_by_id.emplace(s.persona_id, &s).second) {
      fail(ErrorCode::InvalidArgument, "more than one SJT session for " + s.persona_id);
    }
  }
  std::map<std::string, const persona::PersonaRecord*> rec_by_id;
  for (const auto& r : personas) rec_by_id.emplace(r.id, &r);

  Population pop;
  std::set<std::string> seen;
  for (const auto& h : hexaco_sessions) {
    if (!seen.insert(h.persona_id).second) {
      fail(ErrorCode::InvalidArgument, "more than one HEXACO session for " + h.persona_id);
    }
    const auto it = sjt_by_id.find(h.persona_id);
    if (it == sjt_by_id.end()) continue;
    PersonaRow row;
    row.persona_id = h.persona_id;
    row.hexaco = score_hexaco(h, inv);
    row.props = trait_proportions(*it->second);
    for (const auto& r : it->second->sjt) {
      if (r.answered()) row.choices.emplace(r.item_id, *r.trait);
    }
    if (const auto rec = rec_by_id.find(h.persona_id); rec != rec_by_id.end()) row.record = *rec->second;
    pop.rows.push_back(std::move(row));
  }
  for (const auto& item : bank) pop.item_seeds.emplace(item.id, item.seed);
  return pop;
}

Json CorrelationTable::to_json() const {
  Json j;
  Json p = Json::array();
  for (const auto& r : pearson) {
    Json row{{"trait", std::string(key(r.trait))}, {"r", r.r ? Json(*r.r) : Json(nullptr)}, {"n", r.n}};
    if (!r.note.empty()) row["note"] = r.note;
    p.push_back(row);
  }
  j["pearson"] = p;
  Json pb = Json::array();
  for (const auto& r : point_biserial) {
    Json row{{"item_id", r.item_id},
             {"trait", std::string(key(r.trait))},
             {"r_pb", r.r_pb ? Json(*r.r_pb) : Json(nullptr)},
             {"n", r.n}};
    if (!r.note.empty()) row["note"] = r.note;
    pb.push_back(row);
  }
  j["point_biserial"] = pb;
  return j;
}

CorrelationTable cross_persona_correlations(const Population& pop) {
  if (pop.rows.size() < 3) {
    fail(ErrorCode::TooFewObservations, "correlations need at least 3 personas, got " + std::to_string(pop.rows.size()));
  }
  CorrelationTable table;
  for (Trait t : kTraits) {
    stats::SampleVector x{{}, "hexaco_" + std::string(key(t))};
    stats::SampleVector y{{}, "sjt_" + std::string(key(t))};
    for (const auto& r : pop.rows) {
      x.values.push_back(r.hexaco[index(t)]);
      y.values.push_back(r.props.fraction[index(t)]);
    }
    CorrelationRow row;
    row.trait = t;
    row.n = pop.rows.size();
    try {
      row.r = stats::pearson_r(x, y);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ZeroVariance) throw;
      row.note = "degenerate variance";
    }
    table.pearson.push_back(std::move(row));
  }

  std::set<std::string> item_ids;
  for (const auto& r : pop.rows) {
    for (const auto& [id, _] : r.choices) item_ids.insert(id);
  }
  for (const auto& id : item_ids) {
    for (Trait t : kTraits) {
      stats::SampleVector b{{}, id + ":" + std::string(key(t))};
      stats::SampleVector y{{}, "hexaco_" + std::string(key(t))};
      for (const auto& r : pop.rows) {
        const auto c = r.choices.find(id);
        if (c == r.choices.end()) continue;
        b.values.push_back(c->second == t ? 1.0 : 0.0);
        y.values.push_back(r.hexaco[index(t)]);
      }
      PointBiserialRow row;
      row.item_id = id;
      row.trait = t;
      row.n = b.values.size();
      try {
        row.r_pb = stats::point_biserial(b, y);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::SingleClass && e.code() != ErrorCode::ZeroVariance &&
            e.code() != ErrorCode::TooFewObservations) {
          throw;
        }
        row.note = "degenerate variance";
      }
      table.point_biserial.push_back(std::move(row));
    }
  }
  return table;
}

std::vector<RegressionRow> trait_regressions(const Population& pop) {
  if (pop.rows.size() <= 7) {
    fail(ErrorCode::TooFewObservations, "regressions need more than 7 personas, got " + std::to_string(pop.rows.size()));
  }
  stats::DesignMatrix x;
  for (Trait t : kTraits) x.column_names.emplace_back(key(t));
  for (const auto& r : pop.rows) x.rows.emplace_back(r.hexaco.begin(), r.hexaco.end());
  std::vector<RegressionRow> out;
  for (Trait t : kTraits) {
    stats::SampleVector y{{}, "sjt_" + std::string(key(t))};
    for (const auto& r : pop.rows) y.values.push_back(r.props.fraction[index(t)]);
    RegressionRow row;
    row.trait = t;
    try {
      row.fit = stats::ols_fit(x, y);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ZeroTotalVariance) throw;
      row.note = "constant response";
    }
    out.push_back(std::move(row));
  }
  return out;
}

std::vector<std::string> persona_slice_fields() {
  return {"archetype",         "memoir",         "appearance_category", "behavior_category", "sex",
          "age_group",         "education_level", "ethnic_background",  "marital_status",    "state"};
}

Json SliceReport::to_json() const {
  Json j;
  j["field"] = field;
  Json arr = Json::array();
  for (const auto& s : slices) {
    arr.push_back(Json{{"value", s.value},
                       {"personas", s.personas},
                       {"proportions", s.props.to_json()},
                       {"shannon", s.shannon},
                       {"inverse_simpson", s.inverse_simpson}});
  }
  j["slices"] = arr;
  j["warnings"] = warnings;
  return j;
}

SliceReport slice_report(const Population& pop, const std::string& by, const sjt::AttributeDomains* domains) {
  SliceReport rep;
  rep.field = by;
  const auto fields = persona_slice_fields();
  const bool persona_mode = std::find(fields.begin(), fields.end(), by) != fields.end();
  const bool seed_mode =
      std::find(sjt::kAttributeNames.begin(), sjt::kAttributeNames.end(), by) != sjt::kAttributeNames.end();
  if (!persona_mode && !seed_mode) fail(ErrorCode::UnknownField, "unknown slicing field: " + by);

  struct Acc {
    std::set<std::string> personas;
    PerTrait<std::size_t> counts{};
    std::size_t unanswered = 0;
  };
  std::map<std::string, Acc> acc;
  if (persona_mode) {
    for (const auto& r : pop.rows) {
      if (!r.record) {
        rep.warnings.push_back("persona " + r.persona_id + " has no record; skipped");
        continue;
      }
      auto& a = acc[*persona_field(*r.record, by)];
      a.personas.insert(r.persona_id);
      for (Trait t : kTraits) a.counts[index(t)] += r.props.counts[index(t)];
      a.unanswered += r.props.unanswered;
    }
  } else {
    if (domains != nullptr) {
      for (const auto& v : domains->at(by).values) acc[v];
    }
    for (const auto& r : pop.rows) {
      for (const auto& [id, trait] : r.choices) {
        const auto s = pop.item_seeds.find(id);
        if (s == pop.item_seeds.end()) {
          fail(ErrorCode::MissingItems, "no seed attributes for item " + id + "; supply the SJT bank");
        }
        auto& a = acc[s->second.at(by)];
        a.personas.insert(r.persona_id);
        ++a.counts[index(trait)];
      }
    }
  }
  for (const auto& [value, a] : acc) {
    std::size_t answered = 0;
    for (auto c : a.counts) answered += c;
    if (answered == 0) {
      rep.warnings.push_back("slice '" + value + "' is empty; omitted");
      continue;
    }
    rep.slices.push_back(finish_slice(value, a.personas.size(), a.counts, a.unanswered));
  }
  return rep;
}

PcaSummary hexaco_pca(const Population& pop, std::size_t k) {
  stats::DesignMatrix x;
  for (Trait t : kTraits) x.column_names.emplace_back(key(t));
  for (const auto& r : pop.rows) x.rows.emplace_back(r.hexaco.begin(), r.hexaco.end());
  const auto res = stats::pca_project(x, k);
  return {res.explained_variance_ratio, res.components};
}

std::vector<std::string> bank_documents(const std::vector<sjt::SJTItem>& bank) {
  std::vector<std::string> docs;
  docs.reserve(bank.size());
  for (const auto& item : bank) {
    std::string d = item.content.question;
    for (const auto& o : item.content.options) d += "\n" + o;
    docs.push_back(std::move(d));
  }
  return docs;
}

std::vector<MetricRow> diversity_table(const std::vector<sjt::SJTItem>& bank, const metrics::TokenizerConfig& cfg,
                                       const metrics::EmbeddingSet* embeddings) {
  if (bank.empty()) fail(ErrorCode::EmptyCorpus, "diversity needs a non-empty SJT bank");
  const auto docs = bank_documents(bank);
  std::vector<metrics::TokenSequence> seqs;
  seqs.reserve(docs.size());
  for (std::size_t i = 0; i < docs.size(); ++i) seqs.push_back(metrics::tokenize(docs[i], cfg, bank[i].id));
  const auto all = metrics::concatenate(seqs);
  std::vector<MetricRow> rows;
  rows.push_back({"Per-Text TTR", metrics::per_text_ttr(seqs)});
  rows.push_back({"Cumulative TTR", metrics::cumulative_ttr(seqs)});
  rows.push_back({"MSTTR(100)", metrics::msttr(all, 100)});
  rows.push_back({"Compression Ratio", metrics::compression_rate(docs)});
  rows.push_back({"Yule's K", metrics::yules_k(all)});
  rows.push_back({"MTLD", metrics::mtld(all)});
  rows.push_back({"Distinct-1", metrics::distinct_n(all, 1)});
  rows.push_back({"Distinct-2", metrics::distinct_n(all, 2)});
  rows.push_back({"Distinct-3", metrics::distinct_n(all, 3)});
  if (embeddings != nullptr) rows.push_back({"Average Cosine Distance", metrics::avg_cosine_distance(*embeddings)});
  return rows;
}

}  // namespace psychoforge::scoring
