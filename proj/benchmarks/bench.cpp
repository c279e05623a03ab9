#include <benchmark/benchmark.h>

#include <numeric>

#include "gen.hpp"
#include "hypereyes/agent.hpp"
#include "hypereyes/env.hpp"
#include "hypereyes/eval.hpp"
#include "hypereyes/reward.hpp"
#include "hypereyes/rng.hpp"
#include "hypereyes/schema.hpp"
#include "hypereyes/synth.hpp"

namespace {

using namespace hypereyes;

const std::string kTurn =
    "<reason>Two birds, left and right. Look up both at once.</reason>\n"
    "<tool_call>{\"name\": \"image_search\", \"arguments\": {\"image_id\": \"img_0\", \"area\": "
    "[[0.0, 0.0, 0.5, 1.0], [0.5, 0.0, 1.0, 1.0]]}}</tool_call>";

void BM_ParseTurn(benchmark::State& state) {
  if (!parse_turn(kTurn).ok()) state.SkipWithError("sample turn does not parse");
  for (auto _ : state) benchmark::DoNotOptimize(parse_turn(kTurn));
}
BENCHMARK(BM_ParseTurn);

void BM_ParseTurnMalformed(benchmark::State& state) {
  const std::string bad = "<reason>x</reason><tool_call>{\"name\": \"text_search\", \"arguments\": {</tool_call>";
  for (auto _ : state) benchmark::DoNotOptimize(parse_turn(bad));
}
BENCHMARK(BM_ParseTurnMalformed);

void BM_BuildConstraintChain(benchmark::State& state) {
  const auto world = testing::random_kg(7);
  const auto pivots = testing::random_kg_pivots(world);
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(build_constraint_chain(world, pivots[seed % pivots.size()], seed++));
}
BENCHMARK(BM_BuildConstraintChain);

void BM_Rollout(benchmark::State& state) {
  const auto world = testing::creature_world(3);
  const auto items = testing::mosaic_corpus(world, 16, 5, static_cast<std::size_t>(state.range(0)));
  const Environment env(world, EnvConfig::evaluation());
  const auto policy = make_policy("serial_oracle", world);
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(rollout(*policy, env, items[seed % items.size()], seed++));
}
BENCHMARK(BM_Rollout)->Arg(2)->Arg(8);

void BM_RolloutGroup(benchmark::State& state) {
  const auto world = testing::creature_world(3);
  const auto items = testing::mosaic_corpus(world, 4, 5, 6);
  const Environment env(world, EnvConfig::training());
  const auto policy = make_policy("stochastic", world);
  const auto jobs = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(rollout_group(*policy, env, items[0], 8, 11, jobs));
}
BENCHMARK(BM_RolloutGroup)->Arg(1)->Arg(4)->UseRealTime();

void BM_GroupRewards(benchmark::State& state) {
  const auto world = testing::creature_world(3);
  const auto items = testing::mosaic_corpus(world, 1, 5, 6);
  const Environment env(world, EnvConfig::training());
  const auto policy = make_policy("stochastic", world);
  const auto group = rollout_group(*policy, env, items[0], static_cast<std::size_t>(state.range(0)), 3);
  const EfficiencyReference ref{2, 4};
  const TraceConfig config;
  const DefaultJudge judge;
  for (auto _ : state) benchmark::DoNotOptimize(group_rewards(group, items[0], ref, judge, config));
}
BENCHMARK(BM_GroupRewards)->Arg(8)->Arg(64);

void BM_OpdKl(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  std::vector<double> logits(n), teacher(n);
  for (auto& x : logits) x = rng.unit() * 4 - 2;
  for (auto& x : teacher) x = rng.unit() + 1e-3;
  const auto total = std::accumulate(teacher.begin(), teacher.end(), 0.0);
  for (auto& x : teacher) x /= total;
  for (auto _ : state) {
    const auto p = softmax(logits);
    benchmark::DoNotOptimize(opd_kl(p, teacher));
    benchmark::DoNotOptimize(opd_kl_grad(logits, teacher));
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n));
}
BENCHMARK(BM_OpdKl)->Arg(64)->Arg(4096);

}  // namespace

BENCHMARK_MAIN();
