#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include <gtest/gtest.h>

#include "pipeline.hpp"
#include "psychoforge/cli.hpp"
#include "psychoforge/hashing.hpp"
#include "psychoforge/jsonl.hpp"
#include "psychoforge/text.hpp"
#include "support.hpp"

using namespace psychoforge;
using namespace psychoforge::cli;
using testing_support::data_path;
using testing_support::PipelineSetup;
using testing_support::run_pipeline;
using testing_support::TempDir;

namespace {

class Epoch : public ::testing::Environment {
 public:
  void SetUp() override { ::setenv("SOURCE_DATE_EPOCH", "1760400000", 1); }
};
const auto* const kEpoch = ::testing::AddGlobalTestEnvironment(new Epoch);

Options mock_options(const std::filesystem::path& out) {
  Options o;
  o.out = out;
  o.seed = 5;
  o.mock_script = testing_support::mock_script_path();
  return o;
}

std::string digests(const std::filesystem::path& out) {
  std::string s;
  for (const auto& d : digest_tree(out)) s += d.path + " " + d.sha256 + "\n";
  return s;
}

}  // namespace

TEST(Config, EnvInterpolation) {
  ::setenv("PSYCHOFORGE_TEST_HOST", "example.test", 1);
  const Json doc = {{"providers", {{"a", {{"base_url", "https://${PSYCHOFORGE_TEST_HOST}/v1"}, {"n", 3}}}}},
                    {"list", {"${PSYCHOFORGE_TEST_HOST}", "plain"}}};
  const auto out = interpolate_env(doc);
  EXPECT_EQ(out["providers"]["a"]["base_url"], "https://example.test/v1");
  EXPECT_EQ(out["providers"]["a"]["n"], 3);
  EXPECT_EQ(out["list"][0], "example.test");
  ::unsetenv("PSYCHOFORGE_TEST_MISSING");
  EXPECT_ERROR_CODE((void)interpolate_env(Json{{"k", "${PSYCHOFORGE_TEST_MISSING}"}}), ErrorCode::Config);
}

TEST(Config, HashIgnoresSecretsAndTracksContent) {
  TempDir dir;
  text::write_file_atomic(dir / "c.json", R"({"seed": 3, "providers": {"p": {"api_key_ref": "${PF_SECRET}"}}})");
  ::setenv("PF_SECRET", "one", 1);
  const auto a = Config::load(dir / "c.json");
  ::setenv("PF_SECRET", "two", 1);
  const auto b = Config::load(dir / "c.json");
  EXPECT_EQ(a.hash(), b.hash());
  EXPECT_EQ(b.doc["providers"]["p"]["api_key_ref"], "two");
  text::write_file_atomic(dir / "d.json", R"({"seed": 4, "providers": {"p": {"api_key_ref": "${PF_SECRET}"}}})");
  EXPECT_NE(Config::load(dir / "d.json").hash(), a.hash());
  EXPECT_ERROR_CODE((void)Config::load(dir / "missing.json"), ErrorCode::Config);
  text::write_file_atomic(dir / "bad.json", "[1, 2]");
  EXPECT_ERROR_CODE((void)Config::load(dir / "bad.json"), ErrorCode::Config);
  EXPECT_EQ(Config::load(std::nullopt).doc, Json::object());
  EXPECT_EQ(a.resolve("x/y.json"), dir.path() / "x/y.json");
}

TEST(ExitCodes, Mapping) {
  EXPECT_EQ(exit_code_for(ErrorCode::Config), kExitConfig);
  EXPECT_EQ(exit_code_for(ErrorCode::AuthMissing), kExitConfig);
  EXPECT_EQ(exit_code_for(ErrorCode::ExhaustedRetries), kExitProvider);
  EXPECT_EQ(exit_code_for(ErrorCode::Transport), kExitProvider);
  EXPECT_EQ(exit_code_for(ErrorCode::SchemaInvalid), kExitSchema);
  EXPECT_EQ(exit_code_for(ErrorCode::ZeroVariance), kExitFailure);
  std::ostringstream err;
  EXPECT_EQ(run_command("frobnicate", Options{}, err), kExitConfig);
}

TEST(Manifest, DigestTreeSkipsCacheAndManifest) {
  TempDir dir;
  text::write_file_atomic(dir / "roster.jsonl", "{\"schema_version\":1}\n");
  std::filesystem::create_directories(dir / ".cache/ab");
  text::write_file_atomic(dir / ".cache/ab/x.json", "{}");
  text::write_file_atomic(dir / "manifest.json", "{}");
  text::write_file_atomic(dir / "reports/run.md", "# r\n");
  const auto files = digest_tree(dir.path());
  ASSERT_EQ(files.size(), 2u);
  EXPECT_EQ(files[0].path, "reports/run.md");
  EXPECT_EQ(files[0].kind, "reports");
  EXPECT_EQ(files[1].path, "roster.jsonl");
  EXPECT_EQ(files[1].kind, "roster");
  EXPECT_EQ(files[1].lines, 1u);
  EXPECT_EQ(files[1].sha256, sha256_hex("{\"schema_version\":1}\n"));
  write_manifest(dir.path(), "roster", Json{{"status", "ok"}}, Json{{"global_seed", 1}});
  write_manifest(dir.path(), "sjt", Json{{"status", "ok"}}, Json{{"global_seed", 1}});
  const auto m = Json::parse(text::read_file(dir / "manifest.json"));
  EXPECT_TRUE(m["stages"].contains("roster"));
  EXPECT_TRUE(m["stages"].contains("sjt"));
  EXPECT_EQ(m["outputs"].size(), 2u);
  EXPECT_EQ(m["schema_version"], 1);
}

TEST(Commands, RosterIdempotent) {
  TempDir dir;
  auto o = mock_options(dir.path());
  o.n = 25;
  std::ostringstream err;
  ASSERT_EQ(run_command("roster", o, err), 0) << err.str();
  const auto first = text::read_file(dir / "roster.jsonl");
  ASSERT_EQ(run_command("roster", o, err), 0);
  EXPECT_EQ(text::read_file(dir / "roster.jsonl"), first);
  EXPECT_EQ(jsonl::read(dir / "roster.jsonl").size(), 25u);
  const auto m = Json::parse(text::read_file(dir / "manifest.json"));
  EXPECT_EQ(m["global_seed"], 5);
  EXPECT_EQ(m["stages"]["roster"]["params"]["n"], 25);
}

TEST(Commands, ScoreWithoutInventoryNamesFlag) {
  TempDir dir;
  std::ostringstream err;
  EXPECT_EQ(run_command("score", mock_options(dir.path()), err), kExitConfig);
  EXPECT_NE(err.str().find("--inventory"), std::string::npos) << err.str();
}

TEST(Commands, MissingInputsAreConfigErrors) {
  TempDir dir;
  std::ostringstream err;
  EXPECT_EQ(run_command("personas", mock_options(dir.path()), err), kExitConfig);
  EXPECT_NE(err.str().find("--roster"), std::string::npos);
  auto o = mock_options(dir.path());
  o.mock_script = dir / "nope.json";
  o.n = 2;
  EXPECT_EQ(run_command("sjt", o, err), kExitConfig);
  auto bad = mock_options(dir.path());
  bad.provider_profile = "nonexistent";
  bad.n = 2;
  EXPECT_EQ(run_command("sjt", bad, err), kExitConfig);
}

TEST(Commands, AnalyzeDiversityOnSampleBank) {
  TempDir dir;
  auto o = mock_options(dir.path());
  o.bank = data_path("sjt/sample_bank.jsonl");
  o.analyses = {"diversity"};
  std::ostringstream err;
  ASSERT_EQ(run_command("analyze", o, err), 0) << err.str();
  const auto md = text::read_file(dir / "analysis.md");
  for (const char* row : {"| Per-Text TTR |", "| Cumulative TTR |", "| MSTTR(100) |", "| Compression Ratio |", "| Yule's K |",
                          "| MTLD |", "| Distinct-1 |", "| Distinct-2 |", "| Distinct-3 |", "| Average Cosine Distance |"}) {
    EXPECT_NE(md.find(row), std::string::npos) << row;
  }
}

TEST(Commands, ProviderFailureExitCode) {
  TempDir dir;
  text::write_file_atomic(dir / "script.json",
                          R"({"rules": [{"match": "*", "responses": [{"error": 503}]}]})");
  auto o = mock_options(dir / "out");
  o.mock_script = dir / "script.json";
  o.n = 2;
  std::ostringstream err;
  EXPECT_EQ(run_command("sjt", o, err), kExitProvider);
  const auto ledger = jsonl::read(dir / "out/failures_sjt.jsonl");
  ASSERT_EQ(ledger.size(), 2u);
  EXPECT_EQ(ledger[0]["code"], "ExhaustedRetries");
}

TEST(Pipeline, RerunIsByteIdenticalAndInputsUntouched) {
  TempDir a, b;
  const auto script_digest = sha256_file(testing_support::mock_script_path());
  std::ostringstream err;
  ASSERT_EQ(run_pipeline(PipelineSetup{a.path(), 11, 1, 10, 8}, err), 0) << err.str();
  ASSERT_EQ(run_pipeline(PipelineSetup{b.path(), 11, 4, 10, 8}, err), 0) << err.str();
  EXPECT_EQ(digests(a.path()), digests(b.path()));
  EXPECT_EQ(sha256_file(testing_support::mock_script_path()), script_digest);
  for (const char* f : {"roster.jsonl", "personas.jsonl", "sjt_bank.jsonl", "sessions_hexaco.jsonl", "sessions_sjt.jsonl",
                        "scores.jsonl", "reports/run.md", "reports/run.json", "judgments_rubric2.jsonl"}) {
    EXPECT_TRUE(std::filesystem::exists(a / f)) << f;
  }
  EXPECT_EQ(jsonl::read(a / "personas.jsonl").size(), 10u);
  const auto m = Json::parse(text::read_file(a / "manifest.json"));
  for (const char* stage : {"roster", "personas", "sjt", "judge", "administer", "score", "report"}) {
    EXPECT_TRUE(m["stages"].contains(stage)) << stage;
  }

  // Re-running administer against the cache makes no provider calls.
  auto admin = mock_options(a.path());
  admin.seed = 11;
  ASSERT_EQ(run_command("administer", admin, err), 0) << err.str();
  const auto m2 = Json::parse(text::read_file(a / "manifest.json"));
  EXPECT_EQ(m2["stages"]["administer"]["network_calls"], 0);
  EXPECT_EQ(digests(a.path()), digests(b.path()));
}

TEST(Pipeline, DifferentSeedChangesOutputs) {
  TempDir a, b;
  std::ostringstream err;
  ASSERT_EQ(run_pipeline(PipelineSetup{a.path(), 1, 2, 9, 6}, err), 0) << err.str();
  ASSERT_EQ(run_pipeline(PipelineSetup{b.path(), 2, 2, 9, 6}, err), 0) << err.str();
  EXPECT_NE(text::read_file(a / "roster.jsonl"), text::read_file(b / "roster.jsonl"));
}

TEST(Executable, ExitStatusAndHelp) {
  TempDir dir;
  const std::string exe = PSYCHOFORGE_CLI_PATH;
  const auto run = [&](const std::string& args) {
    const int status = std::system((exe + " " + args + " > " + (dir / "log.txt").string() + " 2>&1").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  };
  EXPECT_EQ(run("--help"), 0);
  EXPECT_EQ(run("score --out " + (dir / "out").string()), kExitConfig);
  EXPECT_NE(text::read_file(dir / "log.txt").find("--inventory"), std::string::npos);
  EXPECT_EQ(run("roster -n 3 --seed 9 --out " + (dir / "out").string()), 0);
  EXPECT_EQ(jsonl::read(dir / "out/roster.jsonl").size(), 3u);
  EXPECT_NE(run("administer --controls sideways --out " + (dir / "out").string()), 0);
}
