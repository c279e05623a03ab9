#include "hypereyes/eval.hpp"

#include <algorithm>
#include <numeric>

#include "hypereyes/text.hpp"

namespace hypereyes {

using json = nlohmann::json;

double cas(double acc, double n_tok_thousands, double n_tool) {
  return acc * acc * 100.0 / (n_tok_thousands + 2.0 * n_tool + 1.0);
}

json to_json(const JudgeVerdict& v) {
  return {{"extracted_final_answer", v.extracted_final_answer ? json(*v.extracted_final_answer) : json("None")},
          {"reasoning", v.reasoning},
          {"correct", v.correct ? "yes" : "no"},
          {"confidence", v.confidence}};
}

JudgeVerdict judge_verdict_from_json(const json& j) {
  JudgeVerdict v;
  const auto& extracted = j.at("extracted_final_answer");
  if (extracted.is_string() && extracted.get<std::string>() != "None") v.extracted_final_answer = extracted.get<std::string>();
  v.reasoning = j.value("reasoning", std::string());
  const auto correct = to_lower(trim(j.at("correct").get<std::string>()));
  if (correct != "yes" && correct != "no") throw std::invalid_argument("judge verdict 'correct' must be yes or no");
  v.correct = correct == "yes" && v.extracted_final_answer.has_value();
  v.confidence = std::clamp(j.value("confidence", 0), 0, 100);
  return v;
}

JudgeVerdict judge_answer(std::string_view predicted, std::string_view gold) {
  JudgeVerdict v;
  const auto extracted = trim(predicted);
  if (!extracted.empty()) v.extracted_final_answer = std::string(extracted);
  v.correct = v.extracted_final_answer && answers_equivalent(extracted, gold);
  v.reasoning = v.correct ? "matches the gold answer after normalization" : "does not match the gold answer";
  v.confidence = 100;
  return v;
}

JudgeVerdict DefaultJudge::judge(const std::optional<std::string>& predicted, std::string_view gold) const {
  if (!predicted) return JudgeVerdict{std::nullopt, "no final answer", false, 100};
  return judge_answer(*predicted, gold);
}

bool judged_correct(const Judge& judge, const Trajectory& traj, const QAItem& qa) {
  if (traj.terminal_reason != TerminalReason::answer) return false;
  return judge.judge(traj.final_answer, qa.gold_answer).correct;
}

BenchAggregate aggregate(const std::vector<BenchRecord>& records) {
  BenchAggregate a;
  a.items = records.size();
  if (records.empty()) return a;
  for (const auto& r : records) {
    a.acc += r.correct ? 1.0 : 0.0;
    a.turns += static_cast<double>(r.t_c);
    a.mean_t_s += static_cast<double>(r.t_s);
    a.mean_n_tok += static_cast<double>(r.n_tok);
  }
  const auto n = static_cast<double>(records.size());
  a.acc /= n;
  a.turns /= n;
  a.mean_t_s /= n;
  a.mean_n_tok /= n;
  a.cas = cas(a.acc, a.mean_n_tok / 1000.0, a.turns);
  return a;
}

BenchResult benchmark_run(const Policy& policy, const std::vector<QAItem>& corpus, const Environment& env,
                          const Judge& judge, std::uint64_t seed, std::size_t jobs) {
  BenchResult out;
  out.records.resize(corpus.size());
  out.trajectories.resize(corpus.size());
  parallel_for(corpus.size(), jobs, [&](std::size_t i) {
    const auto& qa = corpus[i];
    auto traj = rollout(policy, env, qa, derive_seed(seed, qa.id));
    BenchRecord r;
    r.qa_id = qa.id;
    r.correct = judged_correct(judge, traj, qa);
    r.t_c = traj.t_c;
    r.t_s = traj.t_s;
    r.n_tok = traj.n_tok;
    r.terminal_reason = traj.terminal_reason;
    r.cas = cas(r.correct ? 1.0 : 0.0, static_cast<double>(r.n_tok) / 1000.0, static_cast<double>(r.t_c));
    out.records[i] = std::move(r);
    out.trajectories[i] = std::move(traj);
  });
  out.aggregate = aggregate(out.records);
  return out;
}

json to_json(const BenchRecord& r) {
  return {{"qa_id", r.qa_id},         {"correct", r.correct}, {"t_c", r.t_c},
          {"t_s", r.t_s},             {"n_tok", r.n_tok},     {"terminal_reason", to_string(r.terminal_reason)},
          {"cas", r.cas}};
}

json to_json(const BenchAggregate& a) {
  return {{"items", a.items}, {"acc", a.acc},           {"turns", a.turns},
          {"t_s", a.mean_t_s}, {"n_tok", a.mean_n_tok}, {"cas", a.cas}};
}

std::vector<SearchResult> distractor_results(const WorldFixture& world, std::string_view topic) {
  std::vector<SearchResult> out;
  auto it = world.distractor_pool().find(std::string(topic));
  if (it == world.distractor_pool().end()) return out;
  for (std::size_t i = 0; i < it->second.size(); ++i)
    out.push_back({"Related result", it->second[i], "fixture://distractor/" + it->first + "#" + std::to_string(i),
                   std::nullopt});
  return out;
}

namespace {

Observation* final_round(Trajectory& traj) {
  for (auto it = traj.turns.rbegin(); it != traj.turns.rend(); ++it)
    if (it->executed_call() && !it->observation->per_call_results.empty()) return &*it->observation;
  return nullptr;
}

bool answered_correctly(const EvidenceAnswerer& answerer, const Trajectory& context, const std::string& gold,
                        const Judge& judge) {
  return judge.judge(answerer(context), gold).correct;
}

const RequestResult* final_request(const Trajectory& traj) {
  for (auto it = traj.turns.rbegin(); it != traj.turns.rend(); ++it)
    if (it->executed_call() && !it->observation->per_call_results.empty()) return &it->observation->per_call_results.back();
  return nullptr;
}

}  // namespace

EvidenceAnswerer first_result_answerer() {
  return [](const Trajectory& context) -> std::optional<std::string> {
    const auto* req = final_request(context);
    if (!req || req->results.empty()) return std::nullopt;
    const auto& first = req->results.front();
    return first.source_entity ? context.final_answer : std::optional<std::string>(first.title);
  };
}

EvidenceAnswerer source_tag_answerer() {
  return [](const Trajectory& context) -> std::optional<std::string> {
    const auto* req = final_request(context);
    if (!req) return std::nullopt;
    for (const auto& r : req->results)
      if (r.source_entity) return context.final_answer;
    return std::nullopt;
  };
}

std::map<std::size_t, double> robustness_protocol(const EvidenceAnswerer& answerer,
                                                  const std::vector<RobustnessCase>& cases,
                                                  const RobustnessOptions& options, std::uint64_t seed,
                                                  const Judge& judge) {
  for (const auto& c : cases) {
    if (!answered_correctly(answerer, c.trajectory, c.gold, judge))
      throw PreconditionViolation(PreconditionViolation::Kind::k0_not_perfect,
                                  "reference trajectory " + c.trajectory.qa_id + " is not answered correctly at K = 0");
  }
  std::map<std::size_t, double> out;
  for (const auto k : options.k_values) {
    double correct = 0.0;
    double trials = 0.0;
    for (std::size_t ci = 0; ci < cases.size(); ++ci) {
      const auto& c = cases[ci];
      Trajectory base = c.trajectory;
      if (!final_round(base)) throw std::invalid_argument("reference trajectory has no executed tool call");
      if (k > c.distractors.size()) throw InsufficientDistractors();
      if (k == 0) {
        correct += answered_correctly(answerer, base, c.gold, judge) ? 1.0 : 0.0;
        trials += 1.0;
        continue;
      }
      if (options.exhaustive) {
        // Every ordering of the final request's results is equally likely under a uniform shuffle.
        Trajectory perturbed = base;
        auto& last = final_round(perturbed)->per_call_results.back();
        const auto combined = [&] {
          auto v = last.results;
          v.insert(v.end(), c.distractors.begin(), c.distractors.begin() + static_cast<std::ptrdiff_t>(k));
          return v;
        }();
        if (combined.size() > 10) throw std::invalid_argument("exhaustive robustness supports at most 10 results");
        last.status = RequestStatus::ok;
        std::vector<std::size_t> order(combined.size());
        std::iota(order.begin(), order.end(), 0);
        do {
          last.results.clear();
          for (auto i : order) last.results.push_back(combined[i]);
          correct += answered_correctly(answerer, perturbed, c.gold, judge) ? 1.0 : 0.0;
          trials += 1.0;
        } while (std::next_permutation(order.begin(), order.end()));
        continue;
      }
      for (std::size_t s = 0; s < options.shuffles; ++s) {
        Trajectory perturbed = base;
        auto* obs = final_round(perturbed);
        *obs = inject_distractors(*obs, c.distractors, k, derive_seed(derive_seed(seed, k), ci * options.shuffles + s));
        correct += answered_correctly(answerer, perturbed, c.gold, judge) ? 1.0 : 0.0;
        trials += 1.0;
      }
    }
    out[k] = trials > 0.0 ? correct / trials : 0.0;
  }
  return out;
}

}  // namespace hypereyes
