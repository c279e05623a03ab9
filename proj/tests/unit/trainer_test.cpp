#include <gtest/gtest.h>

#include "gen.hpp"
#include "hypereyes/trainer.hpp"

namespace hypereyes {
namespace {

struct TrainerFixture : ::testing::Test {
  WorldFixture world = testing::demo_world();
  Environment env{world, EnvConfig::training()};
  DefaultJudge judge;
  std::vector<QAItem> items = testing::mosaic_corpus(world, 16, 21, 4);
  Stochastic policy{world, {0.6, 10.0, 0.5}};
};

TEST_F(TrainerFixture, ReferencesTightenAtTheBarrierOnly) {
  const auto rl = select_rl_set(items, policy, env, judge, 2, 4);
  ASSERT_FALSE(rl.empty());
  TraceConfig config;
  const auto reports = train_sim(rl, items, policy, env, judge, config, 3, 5, 4);
  ASSERT_EQ(reports.size(), 3u);
  for (std::size_t e = 0; e < reports.size(); ++e) {
    const auto& r = reports[e];
    EXPECT_EQ(r.epoch, e);
    EXPECT_EQ(r.rollouts, rl.size() * config.group_size);
    EXPECT_LE(r.positive_fraction, r.positive_fraction_initial);
    for (std::size_t i = 0; i < r.queries.size(); ++i) {
      const auto& q = r.queries[i];
      EXPECT_LE(q.after.t_c_hat, q.before.t_c_hat);
      EXPECT_LE(q.after.t_s_hat, q.before.t_s_hat);
      EXPECT_TRUE(q.after.valid());
      EXPECT_LE(q.positive, q.positive_under_initial);
      if (e > 0) EXPECT_EQ(q.before, reports[e - 1].queries[i].after);
      // Every reward in the group was scored against `before`.
      for (std::size_t g = 0; g < q.rewards.size(); ++g)
        EXPECT_EQ(q.rewards[g].branch,
                  trace_branch(q.usage[g].first, q.usage[g].second, q.rewards[g].r_acc > 0, q.before, config));
    }
  }
}

TEST_F(TrainerFixture, DeterministicAcrossJobs) {
  const auto rl = select_rl_set(items, policy, env, judge, 2, 2);
  const auto a = train_sim(rl, items, policy, env, judge, TraceConfig{}, 2, 9, 1);
  const auto b = train_sim(rl, items, policy, env, judge, TraceConfig{}, 2, 9, 4);
  for (std::size_t e = 0; e < 2; ++e) {
    EXPECT_EQ(epoch_summary(a[e]), epoch_summary(b[e]));
    EXPECT_EQ(epoch_records(a[e]), epoch_records(b[e]));
  }
}

TEST_F(TrainerFixture, MissingItemIsAnError) {
  std::vector<RlSample> rl{{"missing", {2, 4}, {}}};
  ReferenceTable refs = ReferenceTable::from_rl_set(rl);
  EXPECT_THROW(train_epoch_sim(rl, items, policy, env, judge, TraceConfig{}, refs, 1, 0), std::invalid_argument);
}

TEST_F(TrainerFixture, RecordsCarryUsage) {
  const auto rl = select_rl_set(items, policy, env, judge, 2, 2);
  ASSERT_FALSE(rl.empty());
  auto refs = ReferenceTable::from_rl_set(rl);
  const auto r = train_epoch_sim(rl, items, policy, env, judge, TraceConfig{}, refs, 1, 0);
  const auto recs = epoch_records(r);
  ASSERT_EQ(recs.size(), rl.size());
  EXPECT_EQ(recs[0]["rollouts"].size(), 8u);
  EXPECT_TRUE(recs[0]["rollouts"][0].contains("t_s"));
  EXPECT_EQ(epoch_summary(r)["rollouts"], rl.size() * 8);
}

}  // namespace
}  // namespace hypereyes
