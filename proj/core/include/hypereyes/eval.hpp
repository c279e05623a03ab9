#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "hypereyes/agent.hpp"
#include "hypereyes/trajectory.hpp"

namespace hypereyes {

/// Cost-aware score: acc^2 * 100 / (n_tok_thousands + 2 * n_tool + 1).
double cas(double acc, double n_tok_thousands, double n_tool);

/// Judge output. On the wire `correct` is "yes"/"no".
struct JudgeVerdict {
  std::optional<std::string> extracted_final_answer;
  std::string reasoning;
  bool correct = false;
  int confidence = 0;  // 0-100
};

nlohmann::json to_json(const JudgeVerdict& v);
JudgeVerdict judge_verdict_from_json(const nlohmann::json& j);

class Judge {
 public:
  virtual ~Judge() = default;
  /// `predicted` absent means the rollout produced no answer.
  virtual JudgeVerdict judge(const std::optional<std::string>& predicted, std::string_view gold) const = 0;
};

/// Normalized string equality, or numeric equality when both sides parse as numbers.
JudgeVerdict judge_answer(std::string_view predicted, std::string_view gold);

class DefaultJudge final : public Judge {
 public:
  JudgeVerdict judge(const std::optional<std::string>& predicted, std::string_view gold) const override;
};

/// Judge decision for a finished trajectory against its item.
bool judged_correct(const Judge& judge, const Trajectory& traj, const QAItem& qa);

struct BenchRecord {
  std::string qa_id;
  bool correct = false;
  std::size_t t_c = 0;
  std::size_t t_s = 0;
  std::size_t n_tok = 0;
  TerminalReason terminal_reason = TerminalReason::answer;
  double cas = 0.0;  // per-item, for analysis only
};

struct BenchAggregate {
  std::size_t items = 0;
  double acc = 0.0;
  double turns = 0.0;  // mean t_c
  double mean_t_s = 0.0;
  double mean_n_tok = 0.0;
  double cas = 0.0;  // from the corpus-level acc and mean costs
};

struct BenchResult {
  std::vector<BenchRecord> records;
  BenchAggregate aggregate;
  std::vector<Trajectory> trajectories;
};

/// Aggregates records; an empty list gives an all-zero aggregate.
BenchAggregate aggregate(const std::vector<BenchRecord>& records);

/// One rollout per item, seeded by derive_seed(seed, qa.id).
BenchResult benchmark_run(const Policy& policy, const std::vector<QAItem>& corpus, const Environment& env,
                          const Judge& judge, std::uint64_t seed, std::size_t jobs = 1);

nlohmann::json to_json(const BenchRecord& r);
nlohmann::json to_json(const BenchAggregate& a);

// Distractor robustness.

/// Answers from the (possibly perturbed) trajectory context alone.
using EvidenceAnswerer = std::function<std::optional<std::string>(const Trajectory& context)>;

struct RobustnessCase {
  Trajectory trajectory;                 // reference trajectory, unperturbed
  std::string gold;
  std::vector<SearchResult> distractors;  // in-domain pool, injected in order
};

struct RobustnessOptions {
  std::vector<std::size_t> k_values{1, 3, 5, 7, 10};
  std::size_t shuffles = 10;
  /// Average over every ordering of the final request's results instead of sampling `shuffles`.
  bool exhaustive = false;
};

class PreconditionViolation : public std::invalid_argument {
 public:
  enum class Kind { k0_not_perfect };
  PreconditionViolation(Kind kind, const std::string& what) : std::invalid_argument(what), kind_(kind) {}
  [[nodiscard]] Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// Simulated readers of a perturbed context. Both return the recorded final answer when the evidence
/// they rely on is genuine (carries a source entity):
/// the first-result reader trusts only the first result of the final request and otherwise answers
/// with that result's title; the source-tag reader looks for any tagged result in that request.
EvidenceAnswerer first_result_answerer();
EvidenceAnswerer source_tag_answerer();

/// Distractors drawn from the fixture pool for a topic, tagged with no source entity.
std::vector<SearchResult> distractor_results(const WorldFixture& world, std::string_view topic);

/// Mean accuracy per K over cases x orderings. Throws PreconditionViolation when an unperturbed
/// case is answered incorrectly.
std::map<std::size_t, double> robustness_protocol(const EvidenceAnswerer& answerer,
                                                  const std::vector<RobustnessCase>& cases,
                                                  const RobustnessOptions& options, std::uint64_t seed,
                                                  const Judge& judge);

}  // namespace hypereyes
