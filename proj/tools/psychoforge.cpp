#include <iostream>

#include <CLI11.hpp>

#include "psychoforge/cli.hpp"

namespace pc = psychoforge::cli;

int main(int argc, char** argv) {
  CLI::App app{"Synthetic persona and situational judgment test pipeline"};
  app.require_subcommand(1);
  app.set_version_flag("--version", PSYCHOFORGE_VERSION);

  pc::Options o;
  std::string config, out = "out", sessions, roster, personas, bank, inventory, pop_stats, human, mock;
  app.add_option("--config", config, "Declarative JSON config");
  app.add_option("--seed", o.seed, "Global seed");
  app.add_option("--out", out, "Output directory")->capture_default_str();
  app.add_option("--provider-profile", o.provider_profile, "Provider profile name from the config");
  app.add_option("--max-in-flight", o.max_in_flight, "Concurrent provider requests")->check(CLI::PositiveNumber);
  app.add_option("--controls", o.controls, "Presentation control")->check(CLI::IsMember({"fixed", "shuffle", "invert"}));
  app.add_option("--mock-script", mock, "Use the scripted offline backend");

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"roster", "Sample officer demographic profiles"},
      {"personas", "Generate persona records from the roster"},
      {"sjt", "Build the SJT bank with trait-bleed refinement"},
      {"judge", "Run rubric 1, rubric 2 or the persona rubric"},
      {"administer", "Administer HEXACO-100 and SJT sets to personas"},
      {"score", "Score sessions and write per-persona reports"},
      {"analyze", "Correlations, regressions, slices, PCA and diversity"},
      {"report", "Render the run report"},
  };
  for (const auto& [name, desc] : commands) {
    auto* sub = app.add_subcommand(name, desc);
    sub->fallthrough();
    if (name == "roster" || name == "sjt") sub->add_option("-n,--n", o.n, "Number of entities");
    if (name == "personas") sub->add_option("--roster", roster, "Roster JSONL");
    if (name == "sjt") {
      sub->add_option("--mode", o.mode, "Seed sampling")->check(CLI::IsMember({"balanced", "iid"}));
      sub->add_option("--debleed-max", o.debleed_max, "Trait-bleed refinement budget")->check(CLI::NonNegativeNumber);
    }
    if (name == "judge") {
      sub->add_option("--rubric", o.rubric, "1, 2 or persona")->check(CLI::IsMember({"1", "2", "persona"}));
      sub->add_option("--human-ratings", human, "Human persona ratings JSONL");
    }
    if (name == "judge" || name == "administer" || name == "analyze" || name == "report") {
      sub->add_option("--personas", personas, "Persona JSONL");
      sub->add_option("--bank", bank, "SJT bank JSONL");
    }
    if (name == "administer") {
      sub->add_option("--instrument", o.instrument, "hexaco, sjt or both")
          ->check(CLI::IsMember({"hexaco", "sjt", "both"}));
    }
    if (name == "administer" || name == "score" || name == "analyze" || name == "report") {
      sub->add_option("--inventory", inventory, "HEXACO-100 inventory TSV");
    }
    if (name == "score" || name == "analyze" || name == "report") {
      sub->add_option("--sessions", sessions, "Directory holding sessions_*.jsonl");
      sub->add_option("--pop-stats", pop_stats, "Population stats TSV (trait, mean, sd)");
    }
    if (name == "analyze" || name == "report") {
      sub->add_option("--analyses", o.analyses, "correlations, regressions, slices, pca, diversity")->delimiter(',');
      sub->add_option("--slices", o.slices, "Slicing fields")->delimiter(',');
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : pc::kExitConfig;
  }
  auto set = [](const std::string& s, std::optional<std::filesystem::path>& dst) {
    if (!s.empty()) dst = s;
  };
  set(config, o.config);
  set(roster, o.roster);
  set(personas, o.personas);
  set(bank, o.bank);
  set(sessions, o.sessions);
  set(inventory, o.inventory);
  set(pop_stats, o.pop_stats);
  set(human, o.human_ratings);
  set(mock, o.mock_script);
  o.out = out;
  const auto* sub = app.get_subcommands().front();
  return pc::run_command(sub->get_name(), o, std::cerr);
}
