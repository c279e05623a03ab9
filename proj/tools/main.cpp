// hypereyes: batch front end over the core library. Each subcommand is a thin shell over one module.
#include <algorithm>
#include <cstdio>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "hypereyes/curate.hpp"
#include "hypereyes/report.hpp"
#include "hypereyes/trainer.hpp"
#include "io.hpp"

namespace hypereyes::cli {
namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string world = "demo_world.jsonl";
  std::string config;  // optional JSON file with "env", "trace", "curation" sections
  std::string env_preset = "training";
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  std::string out;
  std::string format = "plain";
};

struct Context {
  std::vector<std::string> argv;
};

fs::path world_path(const Common& c) { return resolve_fixture_path(c.world); }

WorldFixture open_world(const Common& c, Manifest& m) {
  const auto path = world_path(c);
  auto world = load_world(path);
  m.input(path);
  return world;
}

json config_file(const Common& c, Manifest& m) {
  if (c.config.empty()) return json::object();
  m.input(c.config);
  try {
    auto j = json::parse(read_file(c.config));
    if (!j.is_object()) throw ValidationError("config must be a JSON object");
    return j;
  } catch (const json::exception& e) {
    throw ValidationError(c.config + ": " + e.what());
  }
}

EnvConfig env_config(const Common& c, const json& file) {
  EnvConfig base;
  if (c.env_preset == "training")
    base = EnvConfig::training();
  else if (c.env_preset == "evaluation")
    base = EnvConfig::evaluation();
  else
    throw UsageError("--env must be training or evaluation");
  return file.contains("env") ? env_config_from_json(file["env"], base) : base;
}

TraceConfig trace_config(const json& file) {
  return file.contains("trace") ? trace_config_from_json(file["trace"]) : TraceConfig{};
}

std::unique_ptr<Policy> policy(const std::string& spec, const WorldFixture& world) {
  try {
    return make_policy(spec, world);
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("--policy: ") + e.what());
  }
}

std::vector<QAItem> read_qa(const std::string& path, Manifest& m) {
  std::vector<QAItem> items;
  for (const auto& row : read_jsonl(path)) {
    try {
      items.push_back(qa_item_from_json(row));
    } catch (const json::exception& e) {
      throw ValidationError(path + ": " + e.what());
    }
  }
  m.input(path);
  return items;
}

std::vector<Trajectory> read_trajectories(const std::string& path, Manifest& m) {
  std::vector<Trajectory> out;
  for (const auto& row : read_jsonl(path)) {
    try {
      out.push_back(trajectory_from_json(row));
    } catch (const json::exception& e) {
      throw ValidationError(path + ": " + e.what());
    }
  }
  m.input(path);
  return out;
}

std::vector<std::size_t> parse_sizes(const std::string& csv, const char* flag) {
  std::vector<std::size_t> out;
  std::stringstream ss(csv);
  std::string part;
  while (std::getline(ss, part, ',')) {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(std::string(trim(part)), &used);
      if (used != std::string(trim(part)).size()) throw std::invalid_argument(part);
      out.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw UsageError(fmt::format("{}: '{}' is not a non-negative integer", flag, part));
    }
  }
  if (out.empty()) throw UsageError(fmt::format("{}: empty list", flag));
  return out;
}

void print_table(const Table& t, const std::string& format) {
  std::fputs((format == "csv" ? t.to_csv() : t.to_plain()).c_str(), stdout);
}

void require_out(const Common& c) {
  if (c.out.empty()) throw UsageError("--out is required");
}

// world-check

int world_check(const Common& c, const Context& ctx) {
  Manifest m("world-check", ctx.argv, c.seed);
  const auto world = open_world(c, m);
  std::set<std::string> classes;
  for (const auto& e : world.entities()) classes.insert(e.class_name);
  std::size_t distractors = 0;
  for (const auto& [_, v] : world.distractor_pool()) distractors += v.size();
  const Table t{{"field", "value"},
                {{"entities", std::to_string(world.entities().size())},
                 {"predicates", std::to_string(world.predicates().size())},
                 {"edges", std::to_string(world.edge_count())},
                 {"classes", std::to_string(classes.size())},
                 {"abstract_values", std::to_string(world.abstract_values().size())},
                 {"distractor_topics", std::to_string(world.distractor_pool().size())},
                 {"distractors", std::to_string(distractors)},
                 {"famous_facts", std::to_string(world.famous_facts().size())}}};
  print_table(t, c.format);
  if (!c.out.empty()) {
    m.output(c.out, t.to_csv());
    m.write(c.out);
  }
  return kOk;
}

// synth-qa: multi-constraint items from random walks.

int synth_qa(const Common& c, const Context& ctx, std::size_t count, std::size_t max_attempts, bool necessity) {
  require_out(c);
  Manifest m("synth-qa", ctx.argv, c.seed);
  const auto world = open_world(c, m);
  std::vector<std::string> starts;
  for (const auto& e : world.entities())
    if (!world.abstract_values().count(e.id) && !world.neighbors(e.id).empty()) starts.push_back(e.id);
  if (starts.empty()) throw ValidationError("fixture has no connected entity to walk from");
  // Small fixtures can make a value that no constraint may use (an abstract concept, a bias-prone
  // class, the target of a blacklisted predicate such as gender) look like an admissible pivot.
  std::set<std::string> inadmissible(world.abstract_values().begin(), world.abstract_values().end());
  const auto banned_families = world.blacklisted_families();
  for (const auto& e : world.entities()) {
    if (world.bias_prone_types().count(e.class_name)) inadmissible.insert(e.id);
    for (const auto& a : e.attributes) {
      const auto* p = world.find_predicate(a.predicate_id);
      if (p && banned_families.count(p->family)) inadmissible.insert(a.value_id);
    }
  }

  Rng rng(derive_seed(c.seed, "synth-qa"));
  std::vector<QAItem> items;
  std::set<std::string> ids;
  std::map<std::string, std::size_t> rejections;
  for (std::size_t attempt = 0; attempt < max_attempts && items.size() < count; ++attempt) {
    const auto& start = starts[rng.below(starts.size())];
    const auto walk = random_walk_pivot(world, start, rng.next());
    if (!walk) {
      ++rejections[std::string(to_string(walk.error().reason))];
      continue;
    }
    if (inadmissible.count(walk.value().pivot_id)) {
      ++rejections["inadmissible_pivot"];
      continue;
    }
    const auto chain = build_constraint_chain(world, walk.value().pivot_id, rng.next());
    if (!chain) {
      ++rejections[std::string(to_string(chain.error().reason))];
      continue;
    }
    auto qa = synth_constraint_question(world, chain.value(), rng.next());
    if (ids.insert(qa.id).second) items.push_back(std::move(qa));
  }
  std::size_t dropped = 0;
  if (necessity) {
    const auto before = items.size();
    items = tool_necessity_filter(items, FamousFactsOracle(world.famous_facts()));
    dropped = before - items.size();
  }
  std::vector<json> rows;
  for (const auto& qa : items) rows.push_back(to_json(qa));
  m.config("count", count);
  m.config("max_attempts", max_attempts);
  m.config("necessity_filter", necessity);
  m.output(c.out, to_jsonl(rows));
  m.write(c.out);
  std::printf("items %zu (requested %zu, dropped by necessity filter %zu)\n", items.size(), count, dropped);
  for (const auto& [why, n] : rejections) std::printf("rejected %s: %zu\n", why.c_str(), n);
  return kOk;
}

// synth-mosaic: multi-entity items over random grid scenes.

int synth_mosaic(const Common& c, const Context& ctx, std::size_t count, std::size_t max_cells, std::size_t max_attempts) {
  require_out(c);
  Manifest m("synth-mosaic", ctx.argv, c.seed);
  const auto world = open_world(c, m);
  // A class is usable when each of its entities has literal facts to ask about.
  std::map<std::string, bool> usable;
  for (const auto& e : world.entities()) {
    auto [it, _] = usable.emplace(e.class_name, true);
    it->second = it->second && !e.literals.empty();
  }
  std::vector<std::string> classes;
  for (const auto& [name, ok] : usable)
    if (ok) classes.push_back(name);
  if (classes.empty()) throw ValidationError("fixture has no class whose entities all carry literals");
  std::vector<Layout> layouts;
  for (const auto& l : supported_layouts())
    if (l.cells() <= max_cells) layouts.push_back(l);
  if (layouts.empty()) throw UsageError("--max-cells must be at least 2");

  Rng rng(derive_seed(c.seed, "synth-mosaic"));
  std::vector<json> rows;
  std::set<std::string> ids;
  std::size_t untemplatable = 0;
  for (std::size_t attempt = 0; attempt < max_attempts && rows.size() < count; ++attempt) {
    const auto layout = layouts[rng.below(layouts.size())];
    auto picked = classes;
    rng.shuffle(picked);
    const std::size_t want = 2 + rng.below(layout.cells() - 1);
    picked.resize(std::min(picked.size(), want));
    const auto scene = compose_mosaic(world, picked, layout, rng.next());
    try {
      auto qa = synth_multientity_question(world, scene, rng.next());
      if (ids.insert(qa.id).second) rows.push_back(to_json(qa));
    } catch (const SynthError&) {
      ++untemplatable;
    }
  }
  m.config("count", count);
  m.config("max_cells", max_cells);
  m.output(c.out, to_jsonl(rows));
  m.write(c.out);
  std::printf("items %zu (requested %zu, untemplatable scenes %zu)\n", rows.size(), count, untemplatable);
  return kOk;
}

// rollout

int rollout_cmd(const Common& c, const Context& ctx, const std::string& qa_path, const std::string& policy_spec) {
  require_out(c);
  Manifest m("rollout", ctx.argv, c.seed);
  const auto world = open_world(c, m);
  const auto file = config_file(c, m);
  const Environment env(world, env_config(c, file));
  const auto items = read_qa(qa_path, m);
  const auto pol = policy(policy_spec, world);
  std::vector<json> rows(items.size());
  parallel_for(items.size(), c.jobs, [&](std::size_t i) {
    rows[i] = to_json(rollout(*pol, env, items[i], derive_seed(c.seed, items[i].id)));
  });
  m.config("env", to_json(env.config()));
  m.config("policy", policy_spec);
  m.output(c.out, to_jsonl(rows));
  m.write(c.out);
  std::printf("trajectories %zu\n", rows.size());
  return kOk;
}

// curate-prs

CurationConfig curation_config(const json& file, const std::string& budgets, std::size_t k, const std::string& filters) {
  CurationConfig cfg;
  if (file.contains("curation")) {
    const auto& j = file["curation"];
    if (j.contains("budgets")) cfg.budgets = j["budgets"].get<std::vector<std::size_t>>();
    cfg.k = j.value("k", cfg.k);
    if (j.contains("filters")) {
      cfg.filters.clear();
      for (const auto& f : j["filters"]) {
        const auto parsed = quality_filter_from_string(f.get<std::string>());
        if (!parsed) throw ValidationError("unknown quality filter: " + f.get<std::string>());
        cfg.filters.insert(*parsed);
      }
    }
  }
  if (!budgets.empty()) cfg.budgets = parse_sizes(budgets, "--budgets");
  if (k > 0) cfg.k = k;
  if (!filters.empty()) {
    cfg.filters.clear();
    std::stringstream ss(filters);
    std::string name;
    while (std::getline(ss, name, ',')) {
      if (name == "none") continue;
      const auto parsed = quality_filter_from_string(trim(name));
      if (!parsed) throw UsageError("--filters: unknown filter '" + name + "'");
      cfg.filters.insert(*parsed);
    }
  }
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return cfg;
}

json curation_json(const CurationConfig& cfg) {
  json filters = json::array();
  for (auto f : cfg.filters) filters.push_back(to_string(f));
  return {{"budgets", cfg.budgets}, {"k", cfg.k}, {"filters", filters}};
}

int curate_prs(const Common& c, const Context& ctx, const std::string& qa_path, const std::string& policy_spec,
               const std::string& budgets, std::size_t k, const std::string& filters) {
  require_out(c);
  Manifest m("curate-prs", ctx.argv, c.seed);
  const auto world = open_world(c, m);
  const auto file = config_file(c, m);
  const Environment env(world, env_config(c, file));
  const auto cfg = curation_config(file, budgets, k, filters);
  const auto items = read_qa(qa_path, m);
  const auto pol = policy(policy_spec, world);
  const auto curated = curate_corpus(items, *pol, env, DefaultJudge(), cfg, c.seed, c.jobs);

  std::vector<json> kept;
  std::vector<json> dropped;
  std::map<std::string, std::size_t> reasons;
  for (const auto& ci : curated) {
    if (ci.trajectory) {
      kept.push_back(to_json(*ci.trajectory));
      continue;
    }
    dropped.push_back({{"qa_id", ci.qa_id}, {"prs_rejected", ci.prs_rejected}, {"reasons", ci.drop_reasons}});
    for (const auto& r : ci.drop_reasons) ++reasons[r];
  }
  m.config("env", to_json(env.config()));
  m.config("curation", curation_json(cfg));
  m.config("policy", policy_spec);
  m.output(c.out, to_jsonl(kept));
  m.output(c.out + ".dropped.jsonl", to_jsonl(dropped));
  m.write(c.out);
  std::printf("kept %zu of %zu\n", kept.size(), curated.size());
  for (const auto& [why, n] : reasons) std::printf("dropped %s: %zu\n", why.c_str(), n);
  return kOk;
}

// select-rl

int select_rl(const Common& c, const Context& ctx, const std::string& qa_path, const std::string& policy_spec) {
  require_out(c);
  Manifest m("select-rl", ctx.argv, c.seed);
  const auto world = open_world(c, m);
  const auto file = config_file(c, m);
  const Environment env(world, env_config(c, file));
  const auto items = read_qa(qa_path, m);
  const auto pol = policy(policy_spec, world);
  const auto picked = select_rl_set(items, *pol, env, DefaultJudge(), c.seed, c.jobs);
  std::map<std::string, EfficiencyReference> refs;
  std::vector<json> seeds;
  for (const auto& s : picked) {
    refs[s.qa_id] = s.reference;
    seeds.push_back(to_json(s.seed_trajectory));
  }
  std::ostringstream sidecar;
  write_reference_sidecar(sidecar, refs);
  m.config("env", to_json(env.config()));
  m.config("policy", policy_spec);
  m.output(c.out, sidecar.str());
  m.output(c.out + ".trajectories.jsonl", to_jsonl(seeds));
  m.write(c.out);
  std::printf("selected %zu of %zu\n", picked.size(), items.size());
  return kOk;
}

// train-sim

int train_sim_cmd(const Common& c, const Context& ctx, const std::string& qa_path, const std::string& rl_path,
                  const std::string& policy_spec, std::size_t epochs, std::size_t group_size) {
  require_out(c);
  Manifest m("train-sim", ctx.argv, c.seed);
  const auto world = open_world(c, m);
  const auto file = config_file(c, m);
  const Environment env(world, env_config(c, file));
  auto trace = trace_config(file);
  if (group_size > 0) trace.group_size = group_size;
  trace.validate();
  const auto items = read_qa(qa_path, m);
  std::map<std::string, EfficiencyReference> refs;
  {
    std::istringstream in(read_file(rl_path));
    refs = read_reference_sidecar(in);
    m.input(rl_path);
  }
  std::vector<RlSample> rl;
  for (const auto& [id, ref] : refs) rl.push_back({id, ref, {}});
  const auto pol = policy(policy_spec, world);
  const auto reports = train_sim(rl, items, *pol, env, DefaultJudge(), trace, epochs, c.seed, c.jobs);

  std::vector<json> records;
  std::vector<json> summaries;
  for (const auto& r : reports) {
    for (auto& rec : epoch_records(r)) records.push_back(std::move(rec));
    summaries.push_back(epoch_summary(r));
  }
  m.config("env", to_json(env.config()));
  m.config("trace", to_json(trace));
  m.config("policy", policy_spec);
  m.config("epochs", epochs);
  m.output(c.out, to_jsonl(records));
  m.output(c.out + ".summary.jsonl", to_jsonl(summaries));
  m.write(c.out);
  print_table(epoch_table(reports), c.format);
  return kOk;
}

// eval-bench

int eval_bench(const Common& c, const Context& ctx, const std::string& qa_path, const std::string& policy_spec,
               const std::string& trajectories_out) {
  require_out(c);
  Manifest m("eval-bench", ctx.argv, c.seed);
  const auto world = open_world(c, m);
  const auto file = config_file(c, m);
  const Environment env(world, env_config(c, file));
  const auto items = read_qa(qa_path, m);
  const auto pol = policy(policy_spec, world);
  const auto result = benchmark_run(*pol, items, env, DefaultJudge(), c.seed, c.jobs);
  std::vector<json> rows;
  for (const auto& r : result.records) rows.push_back(to_json(r));
  m.config("env", to_json(env.config()));
  m.config("policy", policy_spec);
  m.output(c.out, to_jsonl(rows));
  if (!trajectories_out.empty()) {
    std::vector<json> trajs;
    for (const auto& t : result.trajectories) trajs.push_back(to_json(t));
    m.output(trajectories_out, to_jsonl(trajs));
  }
  m.write(c.out);
  print_table(bench_table({{pol->name(), result.aggregate}}), c.format);
  return kOk;
}

// eval-robustness

int eval_robustness(const Common& c, const Context& ctx, const std::string& qa_path, const std::string& traj_path,
                    const std::string& topic, const std::string& answerer_name, const std::string& ks,
                    std::size_t shuffles, bool exhaustive) {
  require_out(c);
  Manifest m("eval-robustness", ctx.argv, c.seed);
  const auto world = open_world(c, m);
  const auto items = read_qa(qa_path, m);
  const auto trajs = read_trajectories(traj_path, m);
  EvidenceAnswerer answerer;
  if (answerer_name == "first-result")
    answerer = first_result_answerer();
  else if (answerer_name == "source-tag")
    answerer = source_tag_answerer();
  else
    throw UsageError("--answerer must be first-result or source-tag");
  const auto pool = distractor_results(world, topic);
  if (pool.empty()) throw ValidationError("no distractors for topic '" + topic + "'");

  std::map<std::string, const QAItem*> by_id;
  for (const auto& qa : items) by_id[qa.id] = &qa;
  std::vector<RobustnessCase> cases;
  for (const auto& t : trajs) {
    auto it = by_id.find(t.qa_id);
    if (it == by_id.end()) throw ValidationError("trajectory for unknown item " + t.qa_id);
    cases.push_back({t, it->second->gold_answer, pool});
  }
  RobustnessOptions opts;
  opts.k_values = parse_sizes(ks, "--k");
  opts.shuffles = shuffles;
  opts.exhaustive = exhaustive;
  const auto acc = robustness_protocol(answerer, cases, opts, c.seed, DefaultJudge());
  const auto table = robustness_table(acc);
  m.config("topic", topic);
  m.config("answerer", answerer_name);
  m.config("k", opts.k_values);
  m.config("shuffles", shuffles);
  m.config("exhaustive", exhaustive);
  m.output(c.out, table.to_csv());
  m.write(c.out);
  print_table(table, c.format);
  return kOk;
}

// report: compare eval-bench record files.

BenchRecord bench_record_from_json(const json& j) {
  BenchRecord r;
  r.qa_id = j.at("qa_id").get<std::string>();
  r.correct = j.at("correct").get<bool>();
  r.t_c = j.at("t_c").get<std::size_t>();
  r.t_s = j.at("t_s").get<std::size_t>();
  r.n_tok = j.at("n_tok").get<std::size_t>();
  const auto reason = terminal_reason_from_string(j.at("terminal_reason").get<std::string>());
  if (!reason) throw ValidationError("unknown terminal_reason in record " + r.qa_id);
  r.terminal_reason = *reason;
  r.cas = j.value("cas", 0.0);
  return r;
}

int report(const Common& c, const Context& ctx, const std::vector<std::string>& runs, bool per_item) {
  Manifest m("report", ctx.argv, c.seed);
  std::vector<BenchRow> rows;
  std::vector<BenchRecord> all;
  for (const auto& run : runs) {
    const auto eq = run.find('=');
    const std::string name = eq == std::string::npos ? fs::path(run).stem().string() : run.substr(0, eq);
    const std::string path = eq == std::string::npos ? run : run.substr(eq + 1);
    std::vector<BenchRecord> records;
    for (const auto& j : read_jsonl(path)) {
      try {
        records.push_back(bench_record_from_json(j));
      } catch (const json::exception& e) {
        throw ValidationError(path + ": " + e.what());
      }
    }
    m.input(path);
    rows.push_back({name, aggregate(records)});
    all.insert(all.end(), records.begin(), records.end());
  }
  const auto table = per_item ? records_table(all) : bench_table(rows);
  print_table(table, c.format);
  if (!c.out.empty()) {
    m.output(c.out, c.format == "csv" ? table.to_csv() : table.to_plain());
    m.write(c.out);
  }
  return kOk;
}

void add_common(CLI::App* sub, Common& c, bool needs_world = true) {
  if (needs_world)
    sub->add_option("--world", c.world, "World fixture (JSONL); searched in $HYPEREYES_FIXTURE_PATH")
        ->capture_default_str();
  sub->add_option("--seed", c.seed, "Run seed; every random choice derives from it")->capture_default_str();
  sub->add_option("--out", c.out, "Primary output path; a <out>.manifest.json is written next to it");
  sub->add_option("--format", c.format, "Table format for stdout")
      ->check(CLI::IsMember({"plain", "csv"}))
      ->capture_default_str();
}

void add_run_options(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "JSON config with env/trace/curation sections");
  sub->add_option("--env", c.env_preset, "Environment budget preset")
      ->check(CLI::IsMember({"training", "evaluation"}))
      ->capture_default_str();
  sub->add_option("--jobs", c.jobs, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
}

int run(int argc, char** argv) {
  CLI::App app{"Parallel grounded-search agent simulator: synthesis, curation, rewards and evaluation"};
  app.require_subcommand(1);
  Context ctx{std::vector<std::string>(argv + 1, argv + argc)};
  Common c;

  auto* wc = app.add_subcommand("world-check", "Load a fixture and print its summary");
  add_common(wc, c);

  std::size_t count = 20, attempts = 2000, max_cells = 4;
  bool no_necessity = false;
  auto* sq = app.add_subcommand("synth-qa", "Synthesize multi-constraint questions by random walk");
  add_common(sq, c);
  sq->add_option("--count", count, "Items to produce")->capture_default_str();
  sq->add_option("--max-attempts", attempts, "Walks to try before giving up")->capture_default_str();
  sq->add_flag("--no-necessity-filter", no_necessity, "Keep items a closed-book oracle already answers");

  auto* sm = app.add_subcommand("synth-mosaic", "Synthesize multi-entity questions over mosaic scenes");
  add_common(sm, c);
  sm->add_option("--count", count, "Items to produce")->capture_default_str();
  sm->add_option("--max-cells", max_cells, "Largest scene")->check(CLI::Range(2, 8))->capture_default_str();
  sm->add_option("--max-attempts", attempts, "Scenes to try")->capture_default_str();

  std::string qa, pol = "parallel_oracle", budgets, filters, rl, trajectories, topic = "birds", answerer = "source-tag",
                  ks = "1,3,5,7,10", traj_out;
  std::size_t k = 0, epochs = 3, group = 0, shuffles = 10;
  bool exhaustive = false, per_item = false;
  std::vector<std::string> runs;

  auto* ro = app.add_subcommand("rollout", "Roll out a policy once per item");
  add_common(ro, c);
  add_run_options(ro, c);
  ro->add_option("--qa", qa, "QA items (JSONL)")->required();
  ro->add_option("--policy", pol, "Policy spec, e.g. stochastic:p_skill=0.6")->capture_default_str();

  auto* cp = app.add_subcommand("curate-prs", "Progressive rejection sampling plus quality filters");
  add_common(cp, c);
  add_run_options(cp, c);
  cp->add_option("--qa", qa, "QA items (JSONL)")->required();
  cp->add_option("--policy", pol, "Policy spec")->capture_default_str();
  cp->add_option("--budgets", budgets, "Ascending turn budgets, e.g. 2,4,8");
  cp->add_option("--k", k, "Rollouts per budget");
  cp->add_option("--filters", filters, "Comma-separated quality filters, or none");

  auto* sr = app.add_subcommand("select-rl", "Pick medium-difficulty items (pass@1 fails, pass@5 succeeds)");
  add_common(sr, c);
  add_run_options(sr, c);
  sr->add_option("--qa", qa, "QA items (JSONL)")->required();
  sr->add_option("--policy", pol, "Policy spec")->capture_default_str();

  auto* ts = app.add_subcommand("train-sim", "Simulate reward computation and reference tightening over epochs");
  add_common(ts, c);
  add_run_options(ts, c);
  ts->add_option("--qa", qa, "QA items (JSONL)")->required();
  ts->add_option("--rl", rl, "Reference sidecar from select-rl")->required();
  ts->add_option("--policy", pol, "Policy spec")->capture_default_str();
  ts->add_option("--epochs", epochs, "Epochs")->capture_default_str();
  ts->add_option("--group-size", group, "Rollouts per query (overrides config)");

  auto* eb = app.add_subcommand("eval-bench", "One rollout per item; Acc, Turns and CAS");
  add_common(eb, c);
  add_run_options(eb, c);
  eb->add_option("--qa", qa, "QA items (JSONL)")->required();
  eb->add_option("--policy", pol, "Policy spec")->capture_default_str();
  eb->add_option("--trajectories-out", traj_out, "Also write the trajectories here");

  auto* er = app.add_subcommand("eval-robustness", "Distractor-injection robustness over reference trajectories");
  add_common(er, c);
  er->add_option("--qa", qa, "QA items (JSONL)")->required();
  er->add_option("--trajectories", trajectories, "Reference trajectories (JSONL)")->required();
  er->add_option("--topic", topic, "Distractor topic in the fixture")->capture_default_str();
  er->add_option("--answerer", answerer, "first-result or source-tag")->capture_default_str();
  er->add_option("--k", ks, "Distractor counts")->capture_default_str();
  er->add_option("--shuffles", shuffles, "Orderings per trajectory and K")->capture_default_str();
  er->add_flag("--exhaustive", exhaustive, "Average over every ordering instead of sampling");

  double acc = 0, tok = 0, tool = 0;
  auto* ca = app.add_subcommand("cas", "Cost-aware score from accuracy, thousands of tokens and tool rounds");
  ca->add_option("--acc", acc, "Accuracy as a fraction")->required()->check(CLI::Range(0.0, 1.0));
  ca->add_option("--tok", tok, "Mean tokens in thousands")->required()->check(CLI::NonNegativeNumber);
  ca->add_option("--tool", tool, "Mean tool rounds")->required()->check(CLI::NonNegativeNumber);

  auto* rp = app.add_subcommand("report", "Tabulate eval-bench record files");
  add_common(rp, c, false);
  rp->add_option("--run", runs, "Record file, optionally name=path; repeatable")->required();
  rp->add_flag("--per-item", per_item, "One row per item instead of one per run");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  if (*wc) return world_check(c, ctx);
  if (*sq) return synth_qa(c, ctx, count, attempts, !no_necessity);
  if (*sm) return synth_mosaic(c, ctx, count, max_cells, attempts);
  if (*ro) return rollout_cmd(c, ctx, qa, pol);
  if (*cp) return curate_prs(c, ctx, qa, pol, budgets, k, filters);
  if (*sr) return select_rl(c, ctx, qa, pol);
  if (*ts) return train_sim_cmd(c, ctx, qa, rl, pol, epochs, group);
  if (*eb) return eval_bench(c, ctx, qa, pol, traj_out);
  if (*er) return eval_robustness(c, ctx, qa, trajectories, topic, answerer, ks, shuffles, exhaustive);
  if (*ca) {
    std::printf("%s\n", fixed(cas(acc, tok, tool), 3).c_str());
    return kOk;
  }
  if (*rp) return report(c, ctx, runs, per_item);
  return kUsage;
}

}  // namespace
}  // namespace hypereyes::cli

int main(int argc, char** argv) {
  using namespace hypereyes::cli;
  try {
    return run(argc, argv);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kUsage;
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "validation error: %s\n", e.what());
    return kValidation;
  } catch (const hypereyes::LoadError& e) {
    std::fprintf(stderr, "validation error: %s\n", e.what());
    return kValidation;
  } catch (const hypereyes::PreconditionViolation& e) {
    std::fprintf(stderr, "validation error: %s\n", e.what());
    return kValidation;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "validation error: %s\n", e.what());
    return kValidation;
  } catch (const nlohmann::json::exception& e) {
    std::fprintf(stderr, "validation error: %s\n", e.what());
    return kValidation;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kRuntime;
  }
}
