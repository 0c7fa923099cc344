#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "psychoforge/cli.hpp"

namespace testing_support {

struct PipelineSetup {
  std::filesystem::path out;
  std::uint64_t seed = 20251014;
  int workers = 4;
  std::size_t personas = 6;
  std::size_t items = 12;
  std::string controls = "fixed";
  int debleed_max = 3;
  bool judges = true;
  std::string final_stage = "report";
};

inline std::filesystem::path mock_script_path() {
  return std::filesystem::path(PSYCHOFORGE_DATA_DIR) / "mock/pipeline.json";
}

/// Every stage in order against the shipped mock script. Returns the first
/// non-zero exit code, or 0.
inline int run_pipeline(const PipelineSetup& setup, std::ostream& err) {
  namespace cli = psychoforge::cli;
  auto base = [&] {
    cli::Options o;
    o.seed = setup.seed;
    o.out = setup.out;
    o.max_in_flight = setup.workers;
    o.mock_script = mock_script_path();
    return o;
  };
  auto roster = base();
  roster.n = setup.personas;
  auto sjt = base();
  sjt.n = setup.items;
  sjt.debleed_max = setup.debleed_max;
  auto judge2 = base();
  judge2.rubric = "2";
  auto judge_persona = base();
  judge_persona.rubric = "persona";
  auto admin = base();
  admin.controls = setup.controls;
  std::vector<std::pair<std::string, cli::Options>> stages = {{"roster", roster}, {"personas", base()}, {"sjt", sjt}};
  if (setup.judges) {
    stages.emplace_back("judge", judge2);
    stages.emplace_back("judge", judge_persona);
  }
  stages.emplace_back("administer", admin);
  stages.emplace_back("score", base());
  stages.emplace_back(setup.final_stage, base());
  for (const auto& [name, opts] : stages) {
    if (const int rc = cli::run_command(name, opts, err); rc != 0) return rc;
  }
  return 0;
}

}  // namespace testing_support
