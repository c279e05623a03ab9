#include <gtest/gtest.h>

#include "gen.hpp"
#include "hypereyes/eval.hpp"

namespace hypereyes {
namespace {

TEST(Cas, PublishedRows) {
  struct Row { double tok, tool, acc, cas; };
  const std::vector<Row> rows{{2.6, 1.71, 19.1, 0.520},  {24.2, 4.30, 24.8, 0.182}, {27.4, 4.87, 27.0, 0.191},
                              {200.8, 11.72, 53.7, 0.128}, {3.4, 1.90, 3.3, 0.013},   {16.7, 4.71, 18.0, 0.119},
                              {22.8, 7.82, 15.3, 0.059},  {303.4, 12.34, 21.2, 0.014}, {8.8, 2.61, 57.9, 2.232},
                              {16.7, 3.13, 46.7, 0.910}};
  for (const auto& r : rows) EXPECT_NEAR(cas(r.acc / 100.0, r.tok, r.tool), r.cas, 1e-3) << r.tok;
  EXPECT_DOUBLE_EQ(cas(1.0, 0.0, 0.0), 100.0);
  EXPECT_DOUBLE_EQ(cas(0.0, 5.0, 5.0), 0.0);
}

TEST(Judge, NormalizationAndNumbers) {
  const DefaultJudge j;
  EXPECT_TRUE(j.judge("September 20, 2024", "september 20 2024").correct);
  EXPECT_TRUE(j.judge("120", "120.0").correct);
  EXPECT_TRUE(j.judge("  Barn   OWL ", "barn owl").correct);
  EXPECT_FALSE(j.judge("121", "120").correct);
  EXPECT_FALSE(j.judge(std::string(""), "120").correct);
  const auto none = j.judge(std::nullopt, "120");
  EXPECT_FALSE(none.correct);
  EXPECT_FALSE(none.extracted_final_answer.has_value());
}

TEST(Judge, WireFormat) {
  const auto v = judge_answer("120", "120");
  const auto j = to_json(v);
  EXPECT_EQ(j["correct"], "yes");
  EXPECT_EQ(j["extracted_final_answer"], "120");
  const auto back = judge_verdict_from_json(j);
  EXPECT_TRUE(back.correct);
  EXPECT_EQ(back.confidence, 100);
  const auto none = to_json(JudgeVerdict{std::nullopt, "none", false, 50});
  EXPECT_EQ(none["extracted_final_answer"], "None");
  EXPECT_EQ(none["correct"], "no");
  EXPECT_FALSE(judge_verdict_from_json(none).extracted_final_answer.has_value());
  nlohmann::json bad = j;
  bad["correct"] = "maybe";
  EXPECT_THROW(judge_verdict_from_json(bad), std::invalid_argument);
}

TEST(Benchmark, ParallelBeatsSerialOnCost) {
  const auto world = testing::demo_world();
  const Environment env(world, EnvConfig::evaluation());
  const auto corpus = testing::mosaic_corpus(world, 20, 4);
  const DefaultJudge judge;
  const auto par = benchmark_run(ParallelOracle(world), corpus, env, judge, 1, 4);
  const auto ser = benchmark_run(SerialOracle(world), corpus, env, judge, 1, 1);
  EXPECT_EQ(par.aggregate.items, 20u);
  EXPECT_DOUBLE_EQ(par.aggregate.acc, 1.0);
  EXPECT_DOUBLE_EQ(ser.aggregate.acc, 1.0);
  EXPECT_LT(par.aggregate.turns, ser.aggregate.turns);
  EXPECT_GT(par.aggregate.cas, ser.aggregate.cas);
  // Same seed, different job count: identical records.
  const auto again = benchmark_run(ParallelOracle(world), corpus, env, judge, 1, 1);
  for (std::size_t i = 0; i < corpus.size(); ++i) EXPECT_EQ(to_json(again.records[i]), to_json(par.records[i]));
}

TEST(Benchmark, EmptyAggregate) {
  const auto a = aggregate({});
  EXPECT_EQ(a.items, 0u);
  EXPECT_EQ(a.cas, 0.0);
}

TEST(Robustness, FirstResultMatchesEnumeration) {
  const auto world = testing::demo_world();
  const DefaultJudge judge;
  const std::vector<RobustnessCase> cases{testing::two_evidence_case(world, "bird_barn_owl")};
  RobustnessOptions exhaustive;
  exhaustive.k_values = {1, 3};
  exhaustive.exhaustive = true;
  const auto acc = robustness_protocol(first_result_answerer(), cases, exhaustive, 0, judge);
  EXPECT_NEAR(acc.at(3), 2.0 / 5.0, 1e-9);
  EXPECT_NEAR(acc.at(1), 2.0 / 3.0, 1e-9);
  RobustnessOptions sampled;
  sampled.shuffles = 400;
  sampled.k_values = {3};
  EXPECT_NEAR(robustness_protocol(first_result_answerer(), cases, sampled, 7, judge).at(3), 0.4, 0.08);
}

TEST(Robustness, SourceTagAnswererIsImmune) {
  const auto world = testing::demo_world();
  const std::vector<RobustnessCase> cases{testing::two_evidence_case(world, "bird_barn_owl"),
                                          testing::two_evidence_case(world, "bird_mute_swan")};
  const auto acc = robustness_protocol(source_tag_answerer(), cases, {}, 3, DefaultJudge());
  ASSERT_EQ(acc.size(), 5u);
  for (const auto& [k, a] : acc) EXPECT_EQ(a, 1.0) << k;
}

TEST(Robustness, OracleRollouts) {
  const auto world = testing::demo_world();
  const Environment env(world, EnvConfig::evaluation());
  std::vector<RobustnessCase> cases;
  for (const auto& qa : testing::mosaic_corpus(world, 6, 2))
    cases.push_back({rollout(ParallelOracle(world), env, qa, 1), qa.gold_answer, distractor_results(world, "birds")});
  RobustnessOptions o;
  o.shuffles = 20;
  for (const auto& [k, a] : robustness_protocol(source_tag_answerer(), cases, o, 4, DefaultJudge())) EXPECT_EQ(a, 1.0) << k;
  const auto first = robustness_protocol(first_result_answerer(), cases, o, 4, DefaultJudge());
  EXPECT_LT(first.at(10), first.at(1));
}

TEST(Robustness, Preconditions) {
  const auto world = testing::demo_world();
  auto c = testing::two_evidence_case(world, "bird_barn_owl");
  c.gold = "Mute Swan";
  try {
    robustness_protocol(first_result_answerer(), {c}, {}, 0, DefaultJudge());
    FAIL();
  } catch (const PreconditionViolation& e) {
    EXPECT_EQ(e.kind(), PreconditionViolation::Kind::k0_not_perfect);
  }
  auto few = testing::two_evidence_case(world, "bird_barn_owl");
  few.distractors.resize(2);
  EXPECT_THROW(robustness_protocol(first_result_answerer(), {few}, {}, 0, DefaultJudge()), InsufficientDistractors);
}

TEST(Robustness, DistractorPool) {
  const auto world = testing::demo_world();
  const auto d = distractor_results(world, "birds");
  ASSERT_EQ(d.size(), 10u);
  for (const auto& r : d) EXPECT_FALSE(r.source_entity.has_value());
  EXPECT_TRUE(distractor_results(world, "nope").empty());
}

}  // namespace
}  // namespace hypereyes
