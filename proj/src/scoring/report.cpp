#include <algorithm>

#include "psychoforge/scoring.hpp"
#include "psychoforge/text.hpp"

namespace psychoforge::scoring {
namespace {

std::vector<AlignmentRow> by_sjt_percent(std::vector<AlignmentRow> rows) {
  std::stable_sort(rows.begin(), rows.end(),
                   [](const AlignmentRow& a, const AlignmentRow& b) { return a.sjt_percent > b.sjt_percent; });
  return rows;
}

Json alignment_json(const std::vector<AlignmentRow>& rows) {
  Json arr = Json::array();
  for (const auto& r : rows) {
    arr.push_back(Json{{"trait", std::string(key(r.trait))},
                       {"z", r.z ? Json(*r.z) : Json(nullptr)},
                       {"relative_level", r.relative_level.empty() ? Json(nullptr) : Json(r.relative_level)},
                       {"sjt_percent", r.sjt_percent},
                       {"alignment", r.alignment_label}});
  }
  return arr;
}

std::string opt_fixed(const std::optional<double>& v, int precision) {
  return v ? text::fixed(*v, precision) : std::string("n/a");
}

std::string alignment_markdown(const std::vector<AlignmentRow>& rows) {
  std::string md = "| Trait | Z-Score | Relative Level | SJT % | Alignment |\n|---|---|---|---|---|\n";
  for (const auto& r : rows) {
    md += "| " + std::string(display_name(r.trait)) + " | " + (r.z ? text::signed_fixed(*r.z, 2) : "n/a") + " | " +
          (r.relative_level.empty() ? "n/a" : r.relative_level) + " | " + text::fixed(r.sjt_percent, 1) + " | " +
          r.alignment_label + " |\n";
  }
  return md;
}

}  // namespace

Document render_persona_report(const PersonaReport& report) {
  const auto rows = by_sjt_percent(report.rows);
  Document doc;
  doc.json["schema_version"] = kSchemaVersion;
  doc.json["persona_id"] = report.scores.persona_id;
  doc.json["hexaco"] = report.scores.to_json();
  doc.json["sjt"] = report.props.to_json();
  doc.json["alignment"] = alignment_json(rows);

  std::string md = "# " + report.scores.persona_id + "\n\n";
  md += "## HEXACO Trait and SJT Alignment\n\n" + alignment_markdown(rows);
  md += "\nAnswered SJT items: " + std::to_string(report.props.answered);
  if (report.props.unanswered > 0) md += " (" + std::to_string(report.props.unanswered) + " unanswered, excluded)";
  md += "\n\n## Domain Means\n\n| Trait | Mean |\n|---|---|\n";
  for (Trait t : kTraits) md += "| " + std::string(display_name(t)) + " | " + text::fixed(report.scores.mean[index(t)], 2) + " |\n";
  doc.markdown = md;
  return doc;
}

std::string regression_table_markdown(const std::vector<RegressionRow>& rows) {
  std::string md = "| Trait | R-Squared | Adj. R-Squared |\n|---|---|---|\n";
  for (const auto& r : rows) {
    md += "| " + std::string(display_name(r.trait)) + " | " +
          (r.fit ? text::fixed(r.fit->r_squared, 3) : "n/a") + " | " +
          (r.fit ? text::fixed(r.fit->adj_r_squared, 3) : "n/a") + " |\n";
  }
  return md;
}

std::string diversity_table_markdown(const std::vector<MetricRow>& rows) {
  std::string md = "| Metric | Value |\n|---|---|\n";
  for (const auto& r : rows) md += "| " + r.metric + " | " + text::fixed(r.value, 3) + " |\n";
  return md;
}

Document render_run_report(const RunReport& report) {
  Document doc;
  Json& j = doc.json;
  j["schema_version"] = kSchemaVersion;
  j["personas"] = report.population.n;
  j["population"] = report.population.to_json();
  Json per = Json::array();
  for (const auto& p : report.personas) {
    per.push_back(Json{{"persona_id", p.scores.persona_id}, {"alignment", alignment_json(by_sjt_percent(p.rows))}});
  }
  j["persona_alignment"] = per;
  j["correlations"] = report.correlations ? report.correlations->to_json() : Json(nullptr);
  Json regs = Json::array();
  for (const auto& r : report.regressions) {
    Json row{{"trait", std::string(key(r.trait))}};
    if (r.fit) {
      row["r_squared"] = r.fit->r_squared;
      row["adj_r_squared"] = r.fit->adj_r_squared;
      row["intercept"] = r.fit->intercept;
      row["coefficients"] = r.fit->coefficients;
      row["n"] = r.fit->n;
    } else {
      row["note"] = r.note;
    }
    regs.push_back(row);
  }
  j["regressions"] = regs;
  Json slices = Json::array();
  for (const auto& s : report.slices) slices.push_back(s.to_json());
  j["slices"] = slices;
  j["pca"] = report.pca ? Json{{"explained_variance_ratio", report.pca->explained_variance_ratio},
                               {"components", report.pca->components}}
                        : Json(nullptr);
  Json div = Json::array();
  for (const auto& m : report.diversity) div.push_back(Json{{"metric", m.metric}, {"value", m.value}});
  j["diversity"] = div;

  std::string md = "# Run Report\n\nPersonas: " + std::to_string(report.population.n) + "\n";
  md += "\n## Reference Population\n\n| Trait | Mean | SD |\n|---|---|---|\n";
  for (Trait t : kTraits) {
    md += "| " + std::string(display_name(t)) + " | " + text::fixed(report.population.mean[index(t)], 3) + " | " +
          text::fixed(report.population.sd[index(t)], 3) + " |\n";
  }
  if (report.correlations) {
    md += "\n## HEXACO and SJT Correlations\n\n| Trait | r | n |\n|---|---|---|\n";
    for (const auto& r : report.correlations->pearson) {
      md += "| " + std::string(display_name(r.trait)) + " | " + opt_fixed(r.r, 3) + " | " + std::to_string(r.n) + " |\n";
    }
  }
  if (!report.regressions.empty()) {
    md += "\n## Summary of Trait-Wise Linear Regression Models\n\n" + regression_table_markdown(report.regressions);
  }
  for (const auto& s : report.slices) {
    md += "\n## Trait Distribution by " + s.field + "\n\n| " + s.field + " | Personas | Answered |";
    for (Trait t : kTraits) md += " " + std::string(letter(t)) + " % |";
    md += " Shannon |\n|---|---|---|";
    for (std::size_t k = 0; k < kTraitCount; ++k) md += "---|";
    md += "---|\n";
    for (const auto& sl : s.slices) {
      md += "| " + sl.value + " | " + std::to_string(sl.personas) + " | " + std::to_string(sl.props.answered) + " |";
      for (Trait t : kTraits) md += " " + text::fixed(100.0 * sl.props.fraction[index(t)], 1) + " |";
      md += " " + text::fixed(sl.shannon, 3) + " |\n";
    }
    for (const auto& w : s.warnings) md += "\n> " + w + "\n";
  }
  if (report.pca) {
    md += "\n## HEXACO Principal Components\n\n| Component | Explained Variance |\n|---|---|\n";
    for (std::size_t k = 0; k < report.pca->explained_variance_ratio.size(); ++k) {
      md += "| PC" + std::to_string(k + 1) + " | " + text::fixed(report.pca->explained_variance_ratio[k], 3) + " |\n";
    }
  }
  if (!report.diversity.empty()) {
    md += "\n## Diversity Metrics for Synthetic SJT Dataset\n\n" + diversity_table_markdown(report.diversity);
  }
  doc.markdown = md;
  return doc;
}

}  // namespace psychoforge::scoring
