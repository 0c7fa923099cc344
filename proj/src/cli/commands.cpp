#include <algorithm>
#include <cstdio>
#include <map>
#include <memory>
#include <ostream>
#include <set>

#include "psychoforge/battery.hpp"
#include "psychoforge/cli.hpp"
#include "psychoforge/demography.hpp"
#include "psychoforge/hashing.hpp"
#include "psychoforge/parallel.hpp"
#include "psychoforge/persona.hpp"
#include "psychoforge/provider.hpp"
#include "psychoforge/rng.hpp"
#include "psychoforge/scoring.hpp"
#include "psychoforge/sjt.hpp"
#include "psychoforge/text.hpp"

#ifndef PSYCHOFORGE_VERSION
#define PSYCHOFORGE_VERSION "0.0.0"
#endif
#ifndef PSYCHOFORGE_DATA_DIR
#define PSYCHOFORGE_DATA_DIR "data"
#endif

namespace psychoforge::cli {
namespace {

namespace fs = std::filesystem;

constexpr std::uint64_t kDefaultSeed = 20251014;

struct Failure {
  std::string id;
  ErrorCode code;
  std::string message;
  std::optional<int> attempts;
};

class Context {
 public:
  Context(std::string command, const Options& o, std::ostream& err)
      : command_(std::move(command)), o_(o), err_(err), cfg_(Config::load(o.config)) {
    seed_ = o.seed ? *o.seed : cfg_.doc.value("seed", kDefaultSeed);
    out_ = o.out;
    data_ = cfg_.doc.contains("data_dir") ? cfg_.resolve(cfg_.doc["data_dir"].get<std::string>())
                                          : fs::path(PSYCHOFORGE_DATA_DIR);
    workers_ = o.max_in_flight ? *o.max_in_flight : cfg_.doc.value("max_in_flight", 4);
    if (workers_ < 1) fail(ErrorCode::Config, "--max-in-flight must be >= 1");
    clock_ = battery::default_clock();
    started_ = clock_();
    fs::create_directories(out_);
  }

  [[nodiscard]] const Options& opts() const { return o_; }
  [[nodiscard]] const Config& cfg() const { return cfg_; }
  [[nodiscard]] Json section() const { return cfg_.section(command_); }
  [[nodiscard]] std::uint64_t seed() const { return seed_; }
  [[nodiscard]] std::uint64_t stage_seed(const std::string& stage) const { return derive_seed(seed_, stage); }
  [[nodiscard]] const fs::path& out() const { return out_; }
  [[nodiscard]] const fs::path& data() const { return data_; }
  [[nodiscard]] std::size_t workers() const { return static_cast<std::size_t>(workers_); }
  [[nodiscard]] std::ostream& err() const { return err_; }

  /// Flag, then config section key, then fallback under the data directory.
  [[nodiscard]] fs::path path_option(const std::optional<fs::path>& flag, const std::string& key,
                                     const fs::path& fallback) const {
    if (flag) return *flag;
    const auto sec = section();
    if (sec.contains(key)) return cfg_.resolve(sec[key].get<std::string>());
    return fallback;
  }

  [[nodiscard]] fs::path require_input(const fs::path& p, const std::string& flag) {
    if (!fs::exists(p)) fail(ErrorCode::Config, flag + ": file not found: " + p.string());
    inputs_.push_back(p);
    return p;
  }

  provider::Provider& provider() {
    if (provider_) return *provider_;
    const std::string profile =
        o_.provider_profile ? *o_.provider_profile : cfg_.doc.value("provider_profile", std::string("default"));
    Json pj = Json::object();
    if (cfg_.doc.contains("providers") && cfg_.doc["providers"].contains(profile)) {
      pj = cfg_.doc["providers"][profile];
    } else if (profile != "default") {
      fail(ErrorCode::Config, "--provider-profile: unknown profile '" + profile + "'");
    }
    auto pc = provider::ProviderConfig::from_json(pj);
    pc.profile = profile;
    pc.max_in_flight = workers_;
    pc.cache_dir = pj.contains("cache_dir") ? cfg_.resolve(pj["cache_dir"].get<std::string>())
                                            : out_ / std::string(kCacheDirName);
    pc.validate();
    std::shared_ptr<provider::Backend> backend;
    std::optional<fs::path> script = o_.mock_script;
    if (!script && pj.contains("mock_script")) script = cfg_.resolve(pj["mock_script"].get<std::string>());
    if (script) {
      if (!fs::exists(*script)) fail(ErrorCode::Config, "--mock-script: file not found: " + script->string());
      inputs_.push_back(*script);
      backend = provider::MockBackend::from_file(*script);
    } else {
      if (pc.base_url.empty()) fail(ErrorCode::Config, "provider profile '" + profile + "' has no base_url");
      backend = std::make_shared<provider::HttpBackend>();
    }
    auto cache = pc.cache_enabled ? std::make_shared<provider::ResponseCache>(pc.cache_dir) : nullptr;
    provider_json_ = pc.to_json();
    provider_json_["backend"] = backend->identity();
    provider_ = std::make_unique<provider::Provider>(pc, std::move(backend), std::move(cache));
    return *provider_;
  }

  void record_failure(Failure f) {
    err_ << command_ << ": " << f.id << ": " << f.message << "\n";
    failures_.push_back(std::move(f));
  }
  void output(const fs::path& p) { outputs_.push_back(p); }
  void param(const std::string& k, Json v) { params_[k] = std::move(v); }

  [[nodiscard]] std::string rel(const fs::path& p) const {
    std::error_code ec;
    const auto r = fs::relative(p, out_, ec);
    if (!ec && !r.empty() && r.begin()->string() != "..") return r.generic_string();
    return p.generic_string();
  }

  /// Writes the failure ledger and the manifest; returns the exit code.
  int finish() {
    const auto ledger = out_ / ("failures_" + command_ + ".jsonl");
    if (!failures_.empty()) {
      std::vector<Json> rows;
      for (const auto& f : failures_) {
        Json r{{"schema_version", kSchemaVersion},
               {"stage", command_},
               {"id", f.id},
               {"code", std::string(to_string(f.code))},
               {"message", f.message}};
        if (f.attempts) r["attempts"] = *f.attempts;
        rows.push_back(r);
      }
      jsonl::write(ledger, rows);
    } else if (fs::exists(ledger)) {
      fs::remove(ledger);
    }
    Json stage;
    stage["command"] = command_;
    stage["params"] = params_;
    Json ins = Json::array();
    for (const auto& p : inputs_) ins.push_back(Json{{"path", rel(p)}, {"sha256", sha256_file(p)}});
    stage["inputs"] = ins;
    Json outs = Json::array();
    for (const auto& p : outputs_) outs.push_back(rel(p));
    stage["outputs"] = outs;
    if (!provider_json_.is_null()) stage["provider"] = provider_json_;
    if (provider_) stage["network_calls"] = provider_->network_calls();
    stage["failures"] = failures_.size();
    stage["status"] = failures_.empty() ? "ok" : "partial";
    stage["started_at"] = started_;
    stage["finished_at"] = clock_();

    Json run;
    run["run_id"] = sha256_hex(cfg_.hash() + ":" + std::to_string(seed_)).substr(0, 16);
    run["global_seed"] = seed_;
    run["tool_version"] = PSYCHOFORGE_VERSION;
    run["config_hash"] = cfg_.hash();
    run["tokenizer"] = metrics::TokenizerConfig{}.describe();
    run["codec"] = std::string(metrics::kCompressionCodec);
    run["seed_derivation"] = "splitmix64(global_seed ^ fnv1a64(stage_key))";
    write_manifest(out_, command_, stage, run);
    if (failures_.empty()) return kExitOk;
    int code = kExitFailure;
    for (const auto& f : failures_) {
      const int c = exit_code_for(f.code);
      if (c == kExitProvider || c == kExitSchema) return c;
      code = c;
    }
    return code;
  }

 private:
  std::string command_;
  const Options& o_;
  std::ostream& err_;
  Config cfg_;
  std::uint64_t seed_ = kDefaultSeed;
  fs::path out_;
  fs::path data_;
  int workers_ = 4;
  battery::Clock clock_;
  std::string started_;
  std::unique_ptr<provider::Provider> provider_;
  Json provider_json_;
  std::vector<fs::path> inputs_;
  std::vector<fs::path> outputs_;
  std::vector<Failure> failures_;
  Json params_ = Json::object();
};

template <typename T>
T setting(const std::optional<T>& flag, const Json& sec, const std::string& key, T fallback) {
  if (flag) return *flag;
  if (sec.contains(key)) return sec[key].get<T>();
  return fallback;
}

std::vector<std::string> list_setting(const std::vector<std::string>& flag, const Json& sec, const std::string& key,
                                      std::vector<std::string> fallback) {
  if (!flag.empty()) return flag;
  if (sec.contains(key)) return sec[key].get<std::vector<std::string>>();
  return fallback;
}

Failure failure_from(const std::string& id, const Error& e) { return {id, e.code(), e.what(), e.attempts()}; }

void write_doc(Context& ctx, const fs::path& stem, const scoring::Document& doc) {
  auto json_path = stem;
  json_path += ".json";
  auto md_path = stem;
  md_path += ".md";
  text::write_file_atomic(json_path, doc.json.dump(2) + "\n");
  text::write_file_atomic(md_path, doc.markdown);
  ctx.output(json_path);
  ctx.output(md_path);
}

fs::path out_file(Context& ctx, const std::string& name) { return ctx.out() / name; }

std::vector<persona::PersonaRecord> load_personas(Context& ctx, const fs::path& p, const std::string& flag) {
  const auto rows = jsonl::read(ctx.require_input(p, flag));
  if (!rows.empty()) (void)jsonl::check_schema_version(rows, p);
  std::vector<persona::PersonaRecord> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(persona::PersonaRecord::from_json(r));
  return out;
}

// ---------------------------------------------------------------------------

int cmd_roster(Context& ctx) {
  const auto sec = ctx.section();
  const std::size_t n = setting(ctx.opts().n, sec, "n", std::size_t{50});
  const auto cfg_path = ctx.require_input(
      sec.contains("config") ? ctx.cfg().resolve(sec["config"].get<std::string>()) : ctx.data() / "demography/officers.json",
      "roster.config");
  const auto cfg = demography::RosterConfig::load(cfg_path);
  const auto roster = demography::generate_roster(cfg, n, ctx.stage_seed("roster"));
  std::vector<Json> rows;
  rows.reserve(roster.size());
  for (const auto& p : roster) rows.push_back(p.to_json());
  const auto path = out_file(ctx, "roster.jsonl");
  jsonl::write(path, rows);
  ctx.output(path);
  ctx.param("n", n);
  return ctx.finish();
}

int cmd_personas(Context& ctx) {
  const auto sec = ctx.section();
  const auto roster_path = ctx.require_input(ctx.opts().roster ? *ctx.opts().roster : ctx.out() / "roster.jsonl",
                                             "--roster");
  const auto rows = jsonl::read(roster_path);
  if (!rows.empty()) (void)jsonl::check_schema_version(rows, roster_path);
  std::vector<demography::DemographicProfile> roster;
  for (const auto& r : rows) roster.push_back(demography::DemographicProfile::from_json(r));
  const auto seeds_dir = sec.contains("seeds_dir") ? ctx.cfg().resolve(sec["seeds_dir"].get<std::string>())
                                                   : ctx.data() / "persona";
  const auto banks = persona::SeedBanks::load(seeds_dir);
  const auto templates = persona::Templates::load(ctx.data() / "prompts");
  persona::GenParams params;
  params.regenerations = sec.value("regenerations", params.regenerations);
  auto& p = ctx.provider();

  std::vector<std::optional<persona::PersonaRecord>> out(roster.size());
  std::vector<std::optional<Failure>> fails(roster.size());
  const auto base = ctx.stage_seed("personas");
  parallel_for(roster.size(), ctx.workers(), [&](std::size_t i) {
    Rng rng(derive_seed(base, roster[i].id));
    try {
      const auto sel = persona::select_seeds(roster[i], banks, rng);
      out[i] = persona::generate_persona(sel, templates, p, params).record;
    } catch (const Error& e) {
      fails[i] = failure_from(roster[i].id, e);
    }
  });
  std::vector<Json> lines;
  for (std::size_t i = 0; i < roster.size(); ++i) {
    if (out[i]) lines.push_back(out[i]->to_json());
    if (fails[i]) ctx.record_failure(*fails[i]);
  }
  const auto path = out_file(ctx, "personas.jsonl");
  jsonl::write(path, lines);
  ctx.output(path);
  ctx.param("regenerations", params.regenerations);
  ctx.param("seeds_dir", ctx.rel(seeds_dir));
  return ctx.finish();
}

int cmd_sjt(Context& ctx) {
  const auto sec = ctx.section();
  const std::size_t n = setting(ctx.opts().n, sec, "n", std::size_t{100});
  const auto mode = sjt::parse_seed_sampling(setting(ctx.opts().mode, sec, "mode", std::string("balanced")));
  sjt::DebleedParams dp;
  dp.max_iters = setting(ctx.opts().debleed_max, sec, "debleed_max", 3);
  dp.threshold = sec.value("threshold", dp.threshold);
  const auto domains = sjt::AttributeDomains::load(
      ctx.require_input(ctx.path_option(std::nullopt, "domains", ctx.data() / "sjt/attribute_domains.json"), "sjt.domains"));
  const auto bases = sjt::load_base_scenarios(
      ctx.require_input(ctx.path_option(std::nullopt, "bases", ctx.data() / "sjt/base_scenarios.json"), "sjt.bases"));
  const auto templates = sjt::Templates::load(ctx.data() / "prompts");
  Rng rng(ctx.stage_seed("sjt:seeds"));
  const auto seeds = sjt::sample_seeds(domains, n, rng, mode);
  auto& p = ctx.provider();

  std::vector<std::optional<sjt::DebleedResult>> res(n);
  std::vector<std::optional<Failure>> fails(n);
  parallel_for(n, ctx.workers(), [&](std::size_t i) {
    char key[16];
    std::snprintf(key, sizeof key, "%05zu", i);
    const auto& base = bases[i % bases.size()];
    try {
      auto item = sjt::generate_sjt(base, seeds[i], templates, p, key);
      if (dp.max_iters > 0) {
        res[i] = sjt::debleed_loop(std::move(item), templates, p, dp);
      } else {
        res[i] = sjt::DebleedResult{std::move(item), {}};
      }
    } catch (const Error& e) {
      fails[i] = failure_from(std::string("sjt-draft-") + key, e);
    }
  });
  std::vector<sjt::SJTItem> bank;
  std::vector<Json> reports;
  for (std::size_t i = 0; i < n; ++i) {
    if (fails[i]) ctx.record_failure(*fails[i]);
    if (!res[i]) continue;
    for (std::size_t k = 0; k < res[i]->reports.size(); ++k) {
      reports.push_back(Json{{"schema_version", kSchemaVersion},
                             {"item_id", res[i]->item.id},
                             {"iteration", k + 1},
                             {"report", res[i]->reports[k].to_json()}});
    }
    bank.push_back(std::move(res[i]->item));
  }
  const auto path = out_file(ctx, "sjt_bank.jsonl");
  sjt::save_bank(path, bank);
  ctx.output(path);
  const auto rpath = out_file(ctx, "judgments_trait_bleed.jsonl");
  jsonl::write(rpath, reports);
  ctx.output(rpath);
  ctx.param("n", n);
  ctx.param("mode", std::string(sjt::to_string(mode)));
  ctx.param("debleed_max", dp.max_iters);
  ctx.param("threshold", dp.threshold);
  return ctx.finish();
}

int cmd_judge(Context& ctx) {
  const auto sec = ctx.section();
  const auto rubric = setting(ctx.opts().rubric, sec, "rubric", std::string("2"));
  ctx.param("rubric", rubric);
  if (rubric != "1" && rubric != "2" && rubric != "persona") {
    fail(ErrorCode::Config, "--rubric must be 1, 2 or persona");
  }
  const auto templates_dir = ctx.data() / "prompts";
  fs::create_directories(ctx.out() / "reports");

  if (rubric == "persona") {
    const auto personas = load_personas(ctx, ctx.opts().personas ? *ctx.opts().personas : ctx.out() / "personas.jsonl",
                                        "--personas");
    const auto templates = persona::Templates::load(templates_dir);
    auto& p = ctx.provider();
    std::vector<std::optional<persona::PersonaRubricScores>> res(personas.size());
    std::vector<std::optional<Failure>> fails(personas.size());
    parallel_for(personas.size(), ctx.workers(), [&](std::size_t i) {
      try {
        res[i] = persona::judge_persona(personas[i], templates, p);
      } catch (const Error& e) {
        fails[i] = failure_from(personas[i].id, e);
      }
    });
    std::vector<persona::PersonaRubricScores> scores;
    std::vector<Json> rows;
    for (std::size_t i = 0; i < personas.size(); ++i) {
      if (fails[i]) ctx.record_failure(*fails[i]);
      if (!res[i]) continue;
      rows.push_back(res[i]->to_json());
      scores.push_back(*res[i]);
    }
    std::vector<persona::PersonaRubricScores> human;
    if (ctx.opts().human_ratings) {
      for (const auto& r : jsonl::read(ctx.require_input(*ctx.opts().human_ratings, "--human-ratings"))) {
        human.push_back(persona::PersonaRubricScores::from_json(r));
      }
    }
    const auto path = out_file(ctx, "judgments_persona.jsonl");
    jsonl::write(path, rows);
    ctx.output(path);
    const auto md = ctx.out() / "reports/judge_persona.md";
    text::write_file_atomic(md, persona::rubric_table_markdown(scores, human));
    ctx.output(md);
    return ctx.finish();
  }

  const auto bank = sjt::load_bank(ctx.require_input(ctx.opts().bank ? *ctx.opts().bank : ctx.out() / "sjt_bank.jsonl",
                                                     "--bank"));
  const auto templates = sjt::Templates::load(templates_dir);
  auto& p = ctx.provider();
  std::vector<std::optional<Json>> res(bank.size());
  std::vector<std::optional<sjt::RubricTwoReport>> r2(bank.size());
  std::vector<std::optional<Failure>> fails(bank.size());
  std::optional<sjt::AttributeDomains> domains;
  if (rubric == "2") {
    domains = sjt::AttributeDomains::load(ctx.require_input(
        ctx.path_option(std::nullopt, "domains", ctx.data() / "sjt/attribute_domains.json"), "judge.domains"));
  }
  parallel_for(bank.size(), ctx.workers(), [&](std::size_t i) {
    try {
      if (rubric == "1") {
        res[i] = sjt::judge_rubric1(bank[i], templates, p).to_json();
      } else {
        r2[i] = sjt::judge_rubric2(bank[i], *domains, templates, p);
        res[i] = r2[i]->to_json();
      }
    } catch (const Error& e) {
      fails[i] = failure_from(bank[i].id, e);
    }
  });
  std::vector<Json> rows;
  std::vector<sjt::SeedAttributes> truths;
  std::vector<sjt::RubricTwoReport> inferred;
  for (std::size_t i = 0; i < bank.size(); ++i) {
    if (fails[i]) ctx.record_failure(*fails[i]);
    if (!res[i]) continue;
    rows.push_back(Json{{"schema_version", kSchemaVersion}, {"item_id", bank[i].id}, {"report", *res[i]}});
    if (r2[i]) {
      truths.push_back(bank[i].seed);
      inferred.push_back(*r2[i]);
    }
  }
  const auto path = out_file(ctx, "judgments_rubric" + rubric + ".jsonl");
  jsonl::write(path, rows);
  ctx.output(path);
  if (rubric == "2" && !inferred.empty()) {
    auto agreement = sjt::seed_recovery_agreement(truths, inferred, *domains);
    agreement.push_back(sjt::trait_mapping_agreement(inferred));
    const auto md = ctx.out() / "reports/judge_rubric2.md";
    text::write_file_atomic(md, sjt::agreement_table_markdown(agreement));
    ctx.output(md);
  }
  return ctx.finish();
}

fs::path inventory_path(Context& ctx) {
  if (ctx.opts().inventory) return ctx.require_input(*ctx.opts().inventory, "--inventory");
  const auto sec = ctx.section();
  if (sec.contains("inventory")) return ctx.require_input(ctx.cfg().resolve(sec["inventory"].get<std::string>()), "--inventory");
  const auto admin = ctx.cfg().section("administer");
  if (admin.contains("inventory")) {
    return ctx.require_input(ctx.cfg().resolve(admin["inventory"].get<std::string>()), "--inventory");
  }
  const auto manifest = ctx.out() / std::string(kManifestName);
  if (fs::exists(manifest)) {
    const auto m = Json::parse(text::read_file(manifest));
    const auto ptr = Json::json_pointer("/stages/administer/params/inventory");
    if (m.contains(ptr)) return ctx.require_input(m[ptr].get<std::string>(), "--inventory");
  }
  fail(ErrorCode::Config, "--inventory is required: no inventory file given on the command line, in the config or in "
                          "the administer stage of the manifest");
}

int cmd_administer(Context& ctx) {
  const auto sec = ctx.section();
  const auto instrument = setting(ctx.opts().instrument, sec, "instrument", std::string("both"));
  if (instrument != "hexaco" && instrument != "sjt" && instrument != "both") {
    fail(ErrorCode::Config, "--instrument must be hexaco, sjt or both");
  }
  const auto control = battery::parse_control(setting(ctx.opts().controls, sec, "controls", std::string("fixed")));
  const auto personas = load_personas(ctx, ctx.opts().personas ? *ctx.opts().personas : ctx.out() / "personas.jsonl",
                                      "--personas");
  const auto templates = battery::Templates::load(ctx.data() / "prompts");
  battery::Controls controls{control, ctx.stage_seed("administer"), {}};
  auto& p = ctx.provider();
  ctx.param("instrument", instrument);
  ctx.param("controls", std::string(battery::to_string(control)));
  ctx.param("conditioning", std::string(battery::kConditioningId));

  if (instrument != "sjt") {
    const fs::path inv_path =
        ctx.opts().inventory || sec.contains("inventory")
            ? inventory_path(ctx)
            : ctx.require_input(ctx.data() / "inventory/placeholder_hexaco100.tsv", "--inventory");
    ctx.param("inventory", inv_path.generic_string());
    const auto inv = battery::Inventory::load_tsv(inv_path);
    const auto path = out_file(ctx, "sessions_hexaco.jsonl");
    std::map<std::string, battery::BatterySession> prior;
    if (fs::exists(path)) {
      for (auto& s : battery::load_sessions(path)) prior.emplace(s.persona_id, std::move(s));
    }
    std::vector<battery::BatterySession> sessions;
    for (const auto& rec : personas) {
      const auto it = prior.find(rec.id);
      const bool usable = it != prior.end() && it->second.control == control && it->second.seed == controls.seed;
      try {
        sessions.push_back(battery::administer_hexaco(rec, inv, templates, p, controls, usable ? &it->second : nullptr));
      } catch (const battery::AdministerError& e) {
        sessions.push_back(e.partial());
        ctx.record_failure(failure_from(rec.id + ":" + e.item_id(), e));
      }
    }
    battery::save_sessions(path, sessions);
    ctx.output(path);
  }
  if (instrument != "hexaco") {
    const auto bank_path = ctx.require_input(ctx.opts().bank ? *ctx.opts().bank : ctx.out() / "sjt_bank.jsonl", "--bank");
    const auto bank = sjt::load_bank(bank_path);
    const auto bank_id = "sha256:" + sha256_file(bank_path).substr(0, 16);
    const auto path = out_file(ctx, "sessions_sjt.jsonl");
    std::map<std::string, battery::BatterySession> prior;
    if (fs::exists(path)) {
      for (auto& s : battery::load_sessions(path)) prior.emplace(s.persona_id, std::move(s));
    }
    std::vector<battery::BatterySession> sessions;
    for (const auto& rec : personas) {
      const auto it = prior.find(rec.id);
      const bool usable = it != prior.end() && it->second.control == control && it->second.seed == controls.seed &&
                          it->second.bank_id == bank_id;
      try {
        sessions.push_back(
            battery::administer_sjt(rec, bank, bank_id, templates, p, controls, usable ? &it->second : nullptr));
      } catch (const battery::AdministerError& e) {
        sessions.push_back(e.partial());
        ctx.record_failure(failure_from(rec.id + ":" + e.item_id(), e));
      }
    }
    battery::save_sessions(path, sessions);
    ctx.output(path);
  }
  return ctx.finish();
}

struct Scored {
  battery::Inventory inventory;
  std::vector<battery::BatterySession> hexaco;
  std::vector<battery::BatterySession> sjt;
  scoring::PopulationStats population;
  std::vector<scoring::PersonaReport> reports;
};

std::vector<battery::BatterySession> complete_sessions(Context& ctx, const fs::path& path) {
  std::vector<battery::BatterySession> out;
  if (!fs::exists(path)) return out;
  for (auto& s : battery::load_sessions(ctx.require_input(path, "--sessions"))) {
    if (s.complete) {
      out.push_back(std::move(s));
    } else {
      ctx.err() << "skipping incomplete session for " << s.persona_id << "\n";
    }
  }
  return out;
}

Scored score_all(Context& ctx) {
  Scored sc;
  sc.inventory = battery::Inventory::load_tsv(inventory_path(ctx));
  const fs::path dir = ctx.opts().sessions ? *ctx.opts().sessions : ctx.out();
  sc.hexaco = complete_sessions(ctx, dir / "sessions_hexaco.jsonl");
  sc.sjt = complete_sessions(ctx, dir / "sessions_sjt.jsonl");

  std::vector<PerTrait<double>> means;
  std::vector<std::string> ids;
  for (const auto& s : sc.hexaco) {
    try {
      means.push_back(scoring::score_hexaco(s, sc.inventory));
      ids.push_back(s.persona_id);
    } catch (const Error& e) {
      ctx.record_failure(failure_from(s.persona_id, e));
    }
  }
  const auto pop_flag = ctx.opts().pop_stats;
  const auto sec = ctx.section();
  if (pop_flag || sec.contains("pop_stats")) {
    const auto p = pop_flag ? *pop_flag : ctx.cfg().resolve(sec["pop_stats"].get<std::string>());
    sc.population = scoring::PopulationStats::load_tsv(ctx.require_input(p, "--pop-stats"));
  } else if (!means.empty()) {
    sc.population = scoring::PopulationStats::from_scores(means);
  }
  std::map<std::string, const battery::BatterySession*> sjt_by_id;
  for (const auto& s : sc.sjt) sjt_by_id.emplace(s.persona_id, &s);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto it = sjt_by_id.find(ids[i]);
    if (it == sjt_by_id.end()) continue;
    scoring::PersonaReport r;
    r.scores = scoring::make_scores(ids[i], means[i], sc.population);
    try {
      r.props = scoring::trait_proportions(*it->second);
    } catch (const Error& e) {
      ctx.record_failure(failure_from(ids[i], e));
      continue;
    }
    r.rows = scoring::alignment_labels(r.scores, r.props);
    sc.reports.push_back(std::move(r));
  }
  return sc;
}

int cmd_score(Context& ctx) {
  const auto sc = score_all(ctx);
  std::vector<Json> rows;
  fs::create_directories(ctx.out() / "reports/personas");
  for (const auto& r : sc.reports) {
    const auto doc = scoring::render_persona_report(r);
    rows.push_back(doc.json);
    write_doc(ctx, ctx.out() / "reports/personas" / r.scores.persona_id, doc);
  }
  const auto path = out_file(ctx, "scores.jsonl");
  jsonl::write(path, rows);
  ctx.output(path);
  const auto pop = ctx.out() / "reports/population.json";
  text::write_file_atomic(pop, sc.population.to_json().dump(2) + "\n");
  ctx.output(pop);
  return ctx.finish();
}

scoring::RunReport analyses(Context& ctx, const std::vector<std::string>& wanted, bool tolerant) {
  scoring::RunReport rep;
  const std::set<std::string> known = {"correlations", "regressions", "slices", "pca", "diversity"};
  for (const auto& a : wanted) {
    if (known.count(a) == 0) fail(ErrorCode::Config, "--analyses: unknown analysis '" + a + "'");
  }
  auto wants = [&](const std::string& a) { return std::find(wanted.begin(), wanted.end(), a) != wanted.end(); };
  auto guarded = [&](const std::string& name, auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      if (!tolerant && e.code() == ErrorCode::Config) throw;
      ctx.record_failure(failure_from(name, e));
    }
  };
  const bool need_population =
      !tolerant || wants("correlations") || wants("regressions") || wants("slices") || wants("pca");
  const fs::path bank_path = ctx.opts().bank ? *ctx.opts().bank : ctx.out() / "sjt_bank.jsonl";
  std::vector<sjt::SJTItem> bank;
  if (fs::exists(bank_path)) bank = sjt::load_bank(ctx.require_input(bank_path, "--bank"));

  if (need_population) {
    Scored sc = score_all(ctx);
    rep.personas = sc.reports;
    rep.population = sc.population;
    const fs::path personas_path = ctx.opts().personas ? *ctx.opts().personas : ctx.out() / "personas.jsonl";
    std::vector<persona::PersonaRecord> personas;
    if (fs::exists(personas_path)) personas = load_personas(ctx, personas_path, "--personas");
    const auto pop = scoring::build_population(sc.hexaco, sc.sjt, sc.inventory, personas, bank);
    if (wants("correlations")) guarded("correlations", [&] { rep.correlations = scoring::cross_persona_correlations(pop); });
    if (wants("regressions")) guarded("regressions", [&] { rep.regressions = scoring::trait_regressions(pop); });
    if (wants("slices")) {
      std::optional<sjt::AttributeDomains> domains;
      domains = sjt::AttributeDomains::load(ctx.data() / "sjt/attribute_domains.json");
      for (const auto& field : list_setting(ctx.opts().slices, ctx.section(), "slices", {"archetype", "time_of_day"})) {
        guarded("slices:" + field, [&] { rep.slices.push_back(scoring::slice_report(pop, field, &*domains)); });
      }
    }
    if (wants("pca")) guarded("pca", [&] { rep.pca = scoring::hexaco_pca(pop, 2); });
  }
  if (wants("diversity")) {
    guarded("diversity", [&] {
      if (bank.empty()) fail(ErrorCode::Config, "--bank: no SJT bank at " + bank_path.string());
      rep.diversity = scoring::diversity_table(bank, metrics::TokenizerConfig{});
      const auto embs = ctx.provider().embed(scoring::bank_documents(bank));
      rep.diversity.push_back({"Average Cosine Distance", metrics::avg_cosine_distance(embs)});
    });
  }
  return rep;
}

const std::vector<std::string> kAllAnalyses = {"correlations", "regressions", "slices", "pca", "diversity"};

int cmd_analyze(Context& ctx) {
  const auto wanted = list_setting(ctx.opts().analyses, ctx.section(), "analyses", kAllAnalyses);
  ctx.param("analyses", wanted);
  auto rep = analyses(ctx, wanted, true);
  rep.personas.clear();
  auto doc = scoring::render_run_report(rep);
  doc.json.erase("persona_alignment");
  doc.json["analyses"] = wanted;
  write_doc(ctx, ctx.out() / "analysis", doc);
  return ctx.finish();
}

int cmd_report(Context& ctx) {
  const auto wanted = list_setting(ctx.opts().analyses, ctx.section(), "analyses", kAllAnalyses);
  ctx.param("analyses", wanted);
  const auto rep = analyses(ctx, wanted, false);
  fs::create_directories(ctx.out() / "reports/personas");
  for (const auto& r : rep.personas) {
    write_doc(ctx, ctx.out() / "reports/personas" / r.scores.persona_id, scoring::render_persona_report(r));
  }
  write_doc(ctx, ctx.out() / "reports/run", scoring::render_run_report(rep));
  return ctx.finish();
}

}  // namespace

int run_command(const std::string& command, const Options& opts, std::ostream& err) {
  try {
    Context ctx(command, opts, err);
    if (command == "roster") return cmd_roster(ctx);
    if (command == "personas") return cmd_personas(ctx);
    if (command == "sjt") return cmd_sjt(ctx);
    if (command == "judge") return cmd_judge(ctx);
    if (command == "administer") return cmd_administer(ctx);
    if (command == "score") return cmd_score(ctx);
    if (command == "analyze") return cmd_analyze(ctx);
    if (command == "report") return cmd_report(ctx);
    err << "unknown command: " << command << "\n";
    return kExitConfig;
  } catch (const Error& e) {
    err << command << ": " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const nlohmann::json::exception& e) {
    err << command << ": " << e.what() << "\n";
    return kExitSchema;
  } catch (const std::exception& e) {
    err << command << ": " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace psychoforge::cli
