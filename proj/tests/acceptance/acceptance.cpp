// Acceptance gate: one PASS/FAIL line per criterion; non-zero exit on any failure.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <mutex>
#include <random>
#include <string>
#include <vector>

#include "gen.hpp"
#include "hypereyes/curate.hpp"
#include "hypereyes/dispatch.hpp"
#include "hypereyes/eval.hpp"
#include "hypereyes/reward.hpp"
#include "hypereyes/trainer.hpp"

namespace {

using namespace hypereyes;

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Records the first failure; later ones are dropped so the line stays short.
struct Check {
  Outcome out;
  void expect(bool cond, const std::string& what) {
    if (!cond && out.pass) {
      out.pass = false;
      out.detail = what;
    }
  }
};

// 1
Outcome cas_reproduction() {
  Check c;
  struct Row { const char* name; double tok, tool, acc, published; };
  const Row rows[] = {
      {"BCVL MMSearch-R1", 2.6, 1.71, 19.1, 0.520},   {"BCVL DeepEyes-V2", 24.2, 4.30, 24.8, 0.182},
      {"BCVL WebWatcher", 27.4, 4.87, 27.0, 0.191},   {"BCVL VDR", 200.8, 11.72, 53.7, 0.128},
      {"IMEB MMSearch-R1", 3.4, 1.90, 3.3, 0.013},    {"IMEB DeepEyes-V2", 16.7, 4.71, 18.0, 0.119},
      {"IMEB WebWatcher", 22.8, 7.82, 15.3, 0.059},   {"IMEB VDR", 303.4, 12.34, 21.2, 0.014},
      {"BCVL HyperEyes-30B", 8.8, 2.61, 57.9, 2.232}, {"IMEB HyperEyes-30B", 16.7, 3.13, 46.7, 0.910},
  };
  double worst = 0.0;
  for (const auto& r : rows) {
    const double got = cas(r.acc / 100.0, r.tok, r.tool);
    worst = std::max(worst, std::abs(got - r.published));
    c.expect(std::abs(got - r.published) <= 1e-3, std::string(r.name) + " = " + std::to_string(got));
  }
  if (c.out.pass) c.out.detail = "10 rows, max |err| " + std::to_string(worst);
  return c.out;
}

// 2
Outcome rank_endpoints() {
  Check c;
  c.expect(rank_interp(1, 8, 0.05, 0.20) == 0.20, "rank 1");
  c.expect(rank_interp(8, 8, 0.05, 0.20) == 0.05, "rank 8");
  const double mid = rank_interp(4, 8, 0.05, 0.20);
  c.expect(std::abs(mid - 0.135714) <= 1e-6, "rank 4 = " + std::to_string(mid));
  if (c.out.pass) c.out.detail = "0.20 / 0.05 / " + std::to_string(mid);
  return c.out;
}

// 3
Outcome branch_totality() {
  Check c;
  const TraceConfig cfg;
  std::size_t inputs = 0;
  for (std::size_t rc = 1; rc <= 3; ++rc)
    for (std::size_t rs = rc; rs < rc + 3; ++rs) {
      const EfficiencyReference ref{rc, rs};
      for (std::size_t tc = 0; tc <= 12; ++tc)
        for (std::size_t ts = 0; ts <= 12; ++ts)
          for (bool acc : {false, true}) {
            ++inputs;
            const bool in_band = tc >= rc && static_cast<double>(tc) <= cfg.gamma * static_cast<double>(rc);
            const bool efficient = tc >= 1 && tc <= rc && ts <= rs;
            const int hits = (acc && tc == 0) + (acc && efficient) + (acc && tc >= 1 && !efficient) + (!acc && in_band) +
                             (!acc && !in_band);
            c.expect(hits == 1, "ambiguous input");
            const auto b = trace_branch(tc, ts, acc, ref, cfg);
            TraceBranch expected = !acc ? (in_band ? TraceBranch::tolerated_failure : TraceBranch::redundant_failure)
                                   : tc == 0 ? TraceBranch::guess
                                   : efficient ? TraceBranch::efficient_success
                                               : TraceBranch::costly_success;
            c.expect(b == expected, "branch mismatch");
            if (acc && tc <= rc && ts > rs)
              for (std::size_t rho = 1; rho <= cfg.group_size; ++rho)
                c.expect(trace_tool_reward(tc, ts, acc, ref, rho, cfg) <= 0.0, "spammer rewarded");
          }
    }
  if (c.out.pass) c.out.detail = std::to_string(inputs) + " inputs";
  return c.out;
}

// 4
Outcome reference_monotonicity() {
  Check c;
  const TraceConfig cfg;
  std::mt19937_64 gen(20240);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t tc0 = 1 + gen() % 8;
    EfficiencyReference ref{tc0, tc0 + gen() % 8};
    for (int epoch = 0; epoch < 8; ++epoch) {
      std::vector<std::pair<std::size_t, std::size_t>> succ(gen() % 7);
      for (auto& [tc, ts] : succ) {
        tc = gen() % 10;
        ts = tc == 0 ? 0 : tc + gen() % 12;
      }
      const auto next = update_reference(ref, succ);
      c.expect(next.t_c_hat <= ref.t_c_hat, "t_c_hat increased");
      c.expect(next.valid(), "t_s_hat >= t_c_hat >= 1 violated");
      for (std::size_t tc = 0; tc <= 16; ++tc)
        for (std::size_t ts = 0; ts <= 24; ++ts)
          if (trace_tool_reward(tc, ts, true, next, 1, cfg) > 0)
            c.expect(trace_tool_reward(tc, ts, true, ref, 1, cfg) > 0, "positive region grew");
      ref = next;
    }
  }
  if (c.out.pass) c.out.detail = "1000 sequences x 8 epochs";
  return c.out;
}

// 5
Outcome advantage_normalization() {
  Check c;
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(-1.6, 1.2);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t g = 2 + gen() % 15;
    std::vector<double> t(g);
    for (auto& v : t) v = u(gen);
    const auto a = advantages(t);
    double sum = 0, sq = 0;
    for (double v : a) sum += v, sq += v * v;
    c.expect(std::abs(sum) <= 1e-9, "sum != 0");
    c.expect(std::abs(std::sqrt(sq / static_cast<double>(g)) - 1.0) <= 1e-9, "sigma != 1");
    std::vector<double> flat(g, u(gen));
    const auto z = advantages(flat);
    c.expect(std::all_of(z.begin(), z.end(), [](double v) { return v == 0.0; }), "degenerate group not zero");
  }
  if (c.out.pass) c.out.detail = "2000 random + 2000 degenerate groups";
  return c.out;
}

std::vector<double> random_simplex(std::mt19937_64& gen, std::size_t n) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> p(n);
  double s = 0;
  for (auto& v : p) s += (v = e(gen) + 1e-6);
  for (auto& v : p) v /= s;
  return p;
}

std::string fmt_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

// 6
Outcome opd_correctness() {
  Check c;
  const double kl = opd_kl({0.5, 0.5}, {0.9, 0.1});
  c.expect(std::abs(kl - 0.510826) <= 1e-6, "example KL = " + std::to_string(kl));
  std::mt19937_64 gen(6);
  for (int i = 0; i < 10000; ++i) {
    const std::size_t n = 2 + gen() % 7;
    const auto p = random_simplex(gen, n);
    const auto q = random_simplex(gen, n);
    c.expect(opd_kl(p, q) > 0.0, "KL not positive for p != q");
    c.expect(opd_kl(p, p) == 0.0, "KL(p, p) != 0");
  }
  std::normal_distribution<double> z(0.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t n = 2 + gen() % 6;
    std::vector<double> logits(n);
    for (auto& v : logits) v = z(gen);
    const auto q = random_simplex(gen, n);
    const auto g = opd_kl_grad(logits, q);
    for (std::size_t k = 0; k < n; ++k) {
      const double h = 1e-5;
      auto up = logits, dn = logits;
      up[k] += h;
      dn[k] -= h;
      const double fd = (opd_kl(softmax(up), q) - opd_kl(softmax(dn), q)) / (2 * h);
      // Relative error; components below 1e-4 are compared at that scale.
      const double rel = std::abs(g[k] - fd) / std::max(std::abs(fd), 1e-4);
      worst = std::max(worst, rel);
      c.expect(rel <= 1e-6, "gradient mismatch " + std::to_string(rel));
    }
  }
  const TraceConfig cfg;
  const TokenStep step{1.1, {0.5, 0.5}, {0.9, 0.1}};
  const auto ok = combined_loss({1, 1, 1}, {0.2, -0.1, -0.1}, {{step, step}, {step}, {step, step, step}}, cfg);
  c.expect(ok.opd_term == 0.0 && !std::signbit(ok.opd_term), "opd_term nonzero on an all-success group");
  if (c.out.pass) c.out.detail = "KL " + std::to_string(kl) + ", worst grad rel err " + fmt_g(worst);
  return c.out;
}

// 7
Outcome surrogate() {
  Check c;
  const TraceConfig cfg;
  c.expect(grpo_surrogate(1.5, 1.0, cfg) == 1.28, "(1.5, 1)");
  c.expect(grpo_surrogate(5.0, -1.0, cfg) == -3.0, "(5, -1)");
  for (int i = 0; i <= 48; ++i) {
    const double r = 0.80 + 0.01 * i;
    for (double a : {1.0, -1.0, 0.37, -2.5}) c.expect(grpo_surrogate(r, a, cfg) == r * a, "not identity inside band");
  }
  if (c.out.pass) c.out.detail = "1.28 / -3.0 / identity on [0.80, 1.28]";
  return c.out;
}

// Counts rollouts started per turn budget.
class LoggedPolicy final : public Policy {
 public:
  explicit LoggedPolicy(const Policy& inner) : inner_(inner) {}
  [[nodiscard]] std::string name() const override { return inner_.name(); }
  std::string next_turn(const PolicyContext& ctx, Rng& rng) const override {
    if (ctx.history.empty()) {
      std::lock_guard lock(mu_);
      ++started_[ctx.max_turns];
    }
    return inner_.next_turn(ctx, rng);
  }
  std::map<std::size_t, std::size_t> started() const {
    std::lock_guard lock(mu_);
    return started_;
  }

 private:
  const Policy& inner_;
  mutable std::mutex mu_;
  mutable std::map<std::size_t, std::size_t> started_;
};

// 8
Outcome prs_minimality() {
  Check c;
  const auto world = testing::demo_world();
  const Environment env(world, EnvConfig::training());
  const DefaultJudge judge;
  const auto corpus = testing::mosaic_corpus(world, 40, 8, 4);
  const auto chain = build_constraint_chain(world, "film_meridian", 0).value();
  const auto chain_qa = synth_constraint_question(world, chain, 0);
  const ParallelOracle parallel(world);
  const SerialOracle serial(world);
  const Guesser guesser;
  std::mt19937_64 gen(8);
  const CurationConfig config;
  std::size_t selected = 0;
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < 100; ++i) {
    const Stochastic stochastic(world, {0.2 + 0.2 * static_cast<double>(gen() % 5), 4.0 + static_cast<double>(gen() % 8), 0.5});
    const Policy* pols[] = {&stochastic, &stochastic, &parallel, &serial, &guesser};
    const Policy& inner = *pols[gen() % 5];
    const QAItem& qa = gen() % 6 == 0 ? chain_qa : corpus[gen() % corpus.size()];
    LoggedPolicy logged(inner);
    const auto out = prs(qa, logged, env, judge, config, gen(), 1 + gen() % 3);
    const auto log = logged.started();
    if (out.rejected()) {
      for (auto b : config.budgets) c.expect(log.count(b) && log.at(b) == config.k, "rejected without sampling every budget");
      for (const auto& s : out.samples) c.expect(!judged_correct(judge, s.trajectory, qa), "rejected despite a success");
      continue;
    }
    ++selected;
    const auto budget = *out.budget;
    std::optional<std::size_t> best;
    for (const auto& s : out.samples) {
      const bool ok = judged_correct(judge, s.trajectory, qa);
      if (s.budget < budget) c.expect(!ok, "success at a smaller budget was skipped");
      if (s.budget == budget && ok && (!best || s.trajectory.t_c < *best)) best = s.trajectory.t_c;
    }
    c.expect(best && out.trajectory().t_c == *best, "selection is not the minimum t_c");
    for (const auto& [b, n] : log) c.expect(b <= budget, "rollouts at a larger budget");
    c.expect(log.count(budget) && log.at(budget) == config.k, "budget not sampled K times");
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  c.expect(secs < 10.0, "took " + std::to_string(secs) + " s");
  c.expect(selected >= 20, "too few selected cases to be meaningful");
  if (c.out.pass) c.out.detail = "100 cases (" + std::to_string(selected) + " selected), " + std::to_string(secs) + " s";
  return c.out;
}

// 9
Outcome chain_soundness() {
  Check c;
  const auto demo = testing::demo_world();
  const auto walk = build_constraint_chain(demo, "film_meridian", 0);
  c.expect(walk.has_value(), "walkthrough rejected");
  if (walk) {
    c.expect(walk.value().candidate_sizes == std::vector<std::size_t>{12, 9, 3}, "walkthrough sizes differ");
    c.expect(walk.value().answer_set == std::set<std::string>{"p_bale", "p_hardwick", "p_murrow"}, "walkthrough answers");
  }
  std::size_t chains = 0;
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    const auto w = testing::random_kg(1000 + seed);
    for (const auto& pivot : testing::random_kg_pivots(w)) {
      const auto built = build_constraint_chain(w, pivot, seed);
      if (!built) continue;
      ++chains;
      const auto& ch = built.value();
      c.expect(ch.constraints.size() >= 2, "chain shorter than 2");
      c.expect(ch.answer_set.size() >= 1 && ch.answer_set.size() <= 8, "answer set size out of range");
      std::set<std::string> brute;
      for (const auto& n : w.neighbors(pivot)) {
        bool all = true;
        for (const auto& a : ch.constraints) all = all && w.has_attribute(n, a);
        if (all) brute.insert(n);
      }
      c.expect(brute == ch.answer_set, "answer set differs from brute force");
    }
  }
  c.expect(chains >= 100, "too few chains built");
  if (c.out.pass) c.out.detail = "12 -> 9 -> 3; " + std::to_string(chains) + " chains on 500 fixtures";
  return c.out;
}

// 10
Outcome mosaic_geometry_and_necessity() {
  Check c;
  for (const auto& l : supported_layouts()) {
    double area = 0;
    for (std::size_t i = 0; i < l.cells(); ++i) {
      area += grid_cell(l, i).area();
      for (std::size_t j = i + 1; j < l.cells(); ++j)
        c.expect(intersection_area(grid_cell(l, i), grid_cell(l, j)) == 0.0, "cells overlap");
    }
    c.expect(std::abs(area - 1.0) <= 1e-12, "areas do not sum to 1");
  }
  const auto w = testing::creature_world(10);
  const auto corpus = testing::mosaic_corpus(w, 200, 10, 8);
  c.expect(corpus.size() == 200, "corpus size");
  const auto base = world_literals(w);
  std::size_t mutations = 0;
  for (const auto& qa : corpus) {
    for (const auto& victim : qa.required_entities) {
      ++mutations;
      LiteralLookup mutated = [&](const std::string& id, const std::string& key) -> std::optional<std::string> {
        auto v = base(id, key);
        if (id != victim || !v) return v;
        double x = 0;
        return parse_number(*v, x) ? format_number(x + 1) : *v + " variant";
      };
      c.expect(recompute_multientity_gold(*qa.scene, *qa.aggregate, mutated) != qa.gold_answer, "mutation ignored");
    }
  }
  if (c.out.pass)
    c.out.detail = std::to_string(supported_layouts().size()) + " layouts; 200 items, " + std::to_string(mutations) + " mutations";
  return c.out;
}

// 11
Outcome dispatch_contract() {
  Check c;
  const std::vector<double> uniform(256, 1000.0);
  const auto t = simulate_dispatch(uniform, 64, 30000.0);
  c.expect(t.makespan_ms == 4000.0, "makespan " + std::to_string(t.makespan_ms));
  c.expect(t.max_in_flight <= 64 && peak_concurrency(t.requests) <= 64, "window exceeded");
  const auto world = testing::demo_world();
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + gen() % 300;
    const std::size_t limit = 1 + gen() % 64;
    std::vector<double> lat(n);
    for (auto& v : lat) v = 1.0 + static_cast<double>(gen() % 5000);
    const auto r = simulate_dispatch(lat, limit, 30000.0);
    c.expect(r.requests.size() == n, "lost requests");
    c.expect(peak_concurrency(r.requests) <= limit && r.max_in_flight <= limit, "window exceeded");
    for (std::size_t i = 0; i < n; ++i) c.expect(std::abs(r.requests[i].finish_ms - r.requests[i].start_ms - lat[i]) <= 1e-9, "request order");
    if (trial % 20 == 0) {
      EnvConfig cfg = EnvConfig::evaluation();
      cfg.latency_jitter_ms = 4000.0;
      cfg.concurrency_limit = limit;
      std::vector<std::string> queries;
      const std::size_t nq = 1 + gen() % 12;
      for (std::size_t q = 0; q < nq; ++q) queries.push_back(world.entities()[gen() % world.entities().size()].name);
      Rng rng(gen());
      const auto batch = text_search(world, queries, cfg, rng);
      for (std::size_t q = 0; q < queries.size(); ++q) c.expect(batch.results[q].index == q, "env results out of order");
    }
  }
  if (c.out.pass) c.out.detail = "4 x L = 4000 ms; 1000 randomized trials";
  return c.out;
}

// 12
Outcome efficiency_ordering() {
  Check c;
  const auto world = testing::demo_world();
  const Environment env(world, EnvConfig::evaluation());
  const auto corpus = testing::mosaic_corpus(world, 50, 12, 4);
  c.expect(corpus.size() == 50, "corpus size");
  const DefaultJudge judge;
  const auto par = benchmark_run(ParallelOracle(world), corpus, env, judge, 12, 4).aggregate;
  const auto ser = benchmark_run(SerialOracle(world), corpus, env, judge, 12, 4).aggregate;
  c.expect(par.acc == 1.0, "parallel acc " + std::to_string(par.acc));
  c.expect(ser.acc == par.acc, "serial acc " + std::to_string(ser.acc));
  c.expect(par.turns < ser.turns, "turns not lower");
  c.expect(par.cas > ser.cas, "cas not higher");
  char buf[160];
  std::snprintf(buf, sizeof buf, "turns %.2f vs %.2f, cas %.3f vs %.3f", par.turns, ser.turns, par.cas, ser.cas);
  if (c.out.pass) c.out.detail = buf;
  return c.out;
}

// 13
Outcome training_curriculum() {
  Check c;
  const auto world = testing::demo_world();
  const Environment env(world, EnvConfig::training());
  const DefaultJudge judge;
  const auto corpus = testing::mosaic_corpus(world, 40, 13, 4);
  const Stochastic policy(world, {0.6, 10.0, 0.5});
  const auto rl = select_rl_set(corpus, policy, env, judge, 13, 4);
  c.expect(!rl.empty(), "empty RL set");
  const auto reports = train_sim(rl, corpus, policy, env, judge, TraceConfig{}, 3, 13, 4);
  std::string fractions;
  for (const auto& r : reports) {
    for (const auto& q : r.queries) {
      c.expect(q.after.t_c_hat <= q.before.t_c_hat && q.after.t_s_hat <= q.before.t_s_hat, "reference grew");
      c.expect(q.positive <= q.positive_under_initial, "query gained positive rollouts");
    }
    c.expect(r.positive_fraction <= r.positive_fraction_initial, "positive fraction exceeds initial");
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s%.3f<=%.3f", fractions.empty() ? "" : ", ", r.positive_fraction,
                  r.positive_fraction_initial);
    fractions += buf;
  }
  if (c.out.pass) c.out.detail = std::to_string(rl.size()) + " queries; " + fractions;
  return c.out;
}

// 14
Outcome robustness_harness() {
  Check c;
  const auto world = testing::demo_world();
  const DefaultJudge judge;
  const std::vector<RobustnessCase> one{testing::two_evidence_case(world, "bird_barn_owl")};
  RobustnessOptions exhaustive;
  exhaustive.k_values = {3};
  exhaustive.exhaustive = true;
  const double first = robustness_protocol(first_result_answerer(), one, exhaustive, 0, judge).at(3);
  c.expect(std::abs(first - 0.4) <= 1e-9, "first-result K=3 = " + std::to_string(first));
  std::vector<RobustnessCase> many;
  for (const char* id : {"bird_barn_owl", "bird_mute_swan", "bird_grey_parrot", "bird_belted_kingfisher"})
    many.push_back(testing::two_evidence_case(world, id));
  const auto tagged = robustness_protocol(source_tag_answerer(), many, RobustnessOptions{}, 14, judge);
  for (std::size_t k : {1, 3, 5, 7, 10}) c.expect(tagged.count(k) && tagged.at(k) == 1.0, "source-tag K=" + std::to_string(k));
  if (c.out.pass) c.out.detail = "first-result K=3 " + std::to_string(first) + "; source-tag 1.0 at K in {1,3,5,7,10}";
  return c.out;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"cas_reproduction", cas_reproduction},
      {"rank_interpolation_endpoints", rank_endpoints},
      {"trace_branch_totality", branch_totality},
      {"reference_monotonicity", reference_monotonicity},
      {"advantage_normalization", advantage_normalization},
      {"opd_correctness", opd_correctness},
      {"grpo_surrogate", surrogate},
      {"prs_minimality_and_laziness", prs_minimality},
      {"constraint_chain_soundness", chain_soundness},
      {"mosaic_geometry_and_necessity", mosaic_geometry_and_necessity},
      {"concurrency_contract", dispatch_contract},
      {"efficiency_ordering", efficiency_ordering},
      {"training_curriculum", training_curriculum},
      {"robustness_harness", robustness_harness},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
