#include <gtest/gtest.h>

#include "gen.hpp"
#include "hypereyes/agent.hpp"
#include "hypereyes/trajectory.hpp"

namespace hypereyes {
namespace {

SearchResult hit(const std::string& snippet, std::optional<std::string> source = std::nullopt) {
  return {"title", snippet, "fixture://x", std::move(source)};
}

TurnRecord call_turn(ToolInvocation call, std::vector<std::vector<SearchResult>> results) {
  TurnRecord t;
  t.parsed = TurnBlock{"look", std::move(call)};
  t.raw = render_turn(*t.parsed);
  Observation obs;
  for (std::size_t i = 0; i < results.size(); ++i) obs.per_call_results.push_back({i, RequestStatus::ok, results[i]});
  t.observation = obs;
  return t;
}

TurnRecord answer_turn(const std::string& text) {
  TurnRecord t;
  t.parsed = TurnBlock{"done", Answer{text}};
  t.raw = render_turn(*t.parsed);
  return t;
}

Trajectory make(std::vector<TurnRecord> turns, std::string question = "q") {
  Trajectory traj;
  traj.qa_id = "t";
  traj.question = std::move(question);
  traj.turns = std::move(turns);
  const auto& last = traj.turns.back();
  if (last.parsed && last.parsed->answer()) traj.final_answer = last.parsed->answer()->text;
  const auto a = account(traj.turns);
  traj.t_c = a.t_c;
  traj.t_s = a.t_s;
  traj.n_tok = a.n_tok;
  return traj;
}

TEST(Account, CountsRoundsInvocationsAndTokens) {
  const auto traj = make({call_turn(TextSearch{{"a b", "c"}}, {{hit("x y")}, {hit("z")}}), answer_turn("z")});
  EXPECT_EQ(traj.t_c, 1u);
  EXPECT_EQ(traj.t_s, 2u);
  const auto& t0 = traj.turns[0];
  const auto expected_tok = whitespace_token_count(render_turn(*t0.parsed)) +
                            whitespace_token_count(render_observation(*t0.observation)) +
                            whitespace_token_count(render_turn(*traj.turns[1].parsed));
  EXPECT_EQ(traj.n_tok, expected_tok);
  EXPECT_TRUE(accounting_consistent(traj));

  auto broken = traj;
  broken.t_s = 5;
  EXPECT_FALSE(accounting_consistent(broken));

  std::vector<std::optional<Observation>> obs(1);
  EXPECT_THROW((void)account(traj.turns, obs), MisalignedRecords);
  const Tokenizer chars = [](std::string_view s) { return s.size(); };
  EXPECT_GT(account(traj.turns, chars).n_tok, traj.n_tok);
}

TEST(CheckFormat, FlagsMalformedTurns) {
  auto traj = make({call_turn(TextSearch{{"a"}}, {{hit("x")}}), answer_turn("x")});
  EXPECT_TRUE(check_format(traj).pass);
  TurnRecord bad;
  bad.raw = "<answer>x</answer>";
  bad.format_error = FormatError{FormatErrorKind::missing_reason, ""};
  traj.turns.insert(traj.turns.begin(), bad);
  const auto v = check_format(traj);
  EXPECT_FALSE(v.pass);
  EXPECT_EQ(v.reason, "missing_reason");
}

TEST(CheckInfoGain, DuplicateAcrossRoundsOnly) {
  const auto within = make({call_turn(TextSearch{{"a", "a"}}, {{hit("same")}, {hit("same")}}), answer_turn("same")});
  EXPECT_TRUE(check_info_gain(within).pass);
  const auto across = make({call_turn(TextSearch{{"a"}}, {{hit("Same  snippet")}}),
                            call_turn(TextSearch{{"b"}}, {{hit("same snippet")}}), answer_turn("same snippet")});
  const auto v = check_info_gain(across);
  EXPECT_FALSE(v.pass);
  EXPECT_EQ(v.reason, kDuplicateEvidence);
  // A later request that also brings something new still gains information.
  const auto partial = make({call_turn(TextSearch{{"a"}}, {{hit("same snippet")}}),
                             call_turn(TextSearch{{"b"}}, {{hit("same snippet"), hit("new fact")}}), answer_turn("new fact")});
  EXPECT_TRUE(check_info_gain(partial).pass);
}

TEST(CheckGrounded, AnswerMustBeSupported) {
  const auto w = testing::demo_world();
  EXPECT_TRUE(check_grounded(make({call_turn(TextSearch{{"a"}}, {{hit("It was Paris in 1920.")}}), answer_turn("paris")}), w).pass);
  EXPECT_FALSE(check_grounded(make({call_turn(TextSearch{{"a"}}, {{hit("It was Paris.")}}), answer_turn("London")}), w).pass);
  EXPECT_FALSE(check_grounded(make({call_turn(TextSearch{{"a"}}, {{hit("Parisian")}}), answer_turn("Paris")}), w).pass);
  EXPECT_EQ(check_grounded(make({answer_turn("Paris")}), w).reason, kUngroundedAnswer);
  // Lists: every part must appear.
  EXPECT_TRUE(check_grounded(make({call_turn(TextSearch{{"a"}}, {{hit("fish and mice")}}), answer_turn("mice, fish")}), w).pass);
  EXPECT_FALSE(check_grounded(make({call_turn(TextSearch{{"a"}}, {{hit("fish only")}}), answer_turn("mice, fish")}), w).pass);
}

TEST(CheckGrounded, SumOverGroundedEntities) {
  const auto w = testing::demo_world();
  const std::vector<Region> cells{grid_cell({1, 2}, 0), grid_cell({1, 2}, 1)};
  const auto img = call_turn(ImageSearch{"img_0", cells},
                             {{hit("The Barn Owl is a species of owl.", "bird_barn_owl")},
                              {hit("The Mute Swan is a species of swan.", "bird_mute_swan")}});
  EXPECT_TRUE(check_grounded(make({img, answer_turn("320")}), w).pass);
  EXPECT_FALSE(check_grounded(make({img, answer_turn("321")}), w).pass);
}

TEST(CheckSequentialShortcut, LaterQueriesMustUseRevealedTokens) {
  const std::string question = "total wingspan of the owl and the swan";
  const auto dependent = make({call_turn(ImageSearch{"img_0", std::vector<Region>{{0, 0, 0.5, 1}}},
                                         {{hit("The Barn Owl is a species of owl.")}}),
                               call_turn(TextSearch{{"Barn Owl wingspan"}}, {{hit("90 cm")}}), answer_turn("90")},
                              question);
  EXPECT_TRUE(check_sequential_shortcut(dependent).pass);
  const auto avoidable = make({call_turn(TextSearch{{"owl wingspan"}}, {{hit("Owls vary.")}}),
                               call_turn(TextSearch{{"swan wingspan"}}, {{hit("Swans vary.")}}), answer_turn("1")},
                              question);
  const auto v = check_sequential_shortcut(avoidable);
  EXPECT_FALSE(v.pass);
  EXPECT_EQ(v.reason, kAvoidableSerialization);
}

TEST(CheckImageOnly, FlagsGroundedImageOnlyTrajectories) {
  const auto w = testing::demo_world();
  const auto img = call_turn(ImageSearch{"img_0", std::vector<Region>{grid_cell({1, 2}, 0)}},
                             {{hit("The Barn Owl is a species of owl.", "bird_barn_owl")}});
  EXPECT_FALSE(check_image_only(make({img, answer_turn("Barn Owl")}), w).pass);
  const auto txt = call_turn(TextSearch{{"Barn Owl"}}, {{hit("The Barn Owl hunts at night.", "bird_barn_owl")}});
  EXPECT_TRUE(check_image_only(make({img, txt, answer_turn("Barn Owl")}), w).pass);
}

TEST(TrajectoryJson, RoundTripFromRollouts) {
  const auto w = testing::demo_world();
  const Environment env(w, EnvConfig::evaluation());
  const auto corpus = testing::mosaic_corpus(w, 5, 1);
  const ParallelOracle oracle(w);
  for (const auto& qa : corpus) {
    auto traj = rollout(oracle, env, qa, 3);
    // One malformed turn to exercise the error fields.
    TurnRecord bad;
    bad.raw = "no tags";
    bad.format_error = FormatError{FormatErrorKind::missing_reason, "no reason block"};
    bad.observation = Observation{{}, 0, 0.0, "missing_reason: no reason block"};
    traj.turns.insert(traj.turns.begin(), bad);
    const auto j = to_json(traj);
    EXPECT_EQ(to_json(trajectory_from_json(j)), j);
  }
}

}  // namespace
}  // namespace hypereyes
