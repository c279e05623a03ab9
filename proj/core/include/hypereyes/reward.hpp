#pragma once

#include <cstddef>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "hypereyes/agent.hpp"
#include "hypereyes/eval.hpp"

namespace hypereyes {

/// Per-query efficiency reference: rounds and invocations of the best success so far.
struct EfficiencyReference {
  std::size_t t_c_hat = 1;
  std::size_t t_s_hat = 1;

  [[nodiscard]] bool valid() const noexcept { return t_s_hat >= t_c_hat && t_c_hat >= 1; }
  friend bool operator==(const EfficiencyReference&, const EfficiencyReference&) = default;
};

struct TraceConfig {
  double gamma = 1.5;
  double lambda_red = 0.1;  // magnitude; applied as -lambda_red
  double lambda_fmt = 0.5;  // magnitude; applied as -lambda_fmt
  std::pair<double, double> r_plus{0.05, 0.20};
  std::pair<double, double> r_minus{-0.10, -0.02};
  std::size_t group_size = 8;
  double lambda_kd = 0.05;
  double clip_low = 0.20;
  double clip_high = 0.28;
  double dual_clip_c = 3.0;
  /// Rank only the correct rollouts of a group instead of all G.
  bool correct_only_ranking = false;

  /// Throws std::invalid_argument on a violated invariant.
  void validate() const;
};

nlohmann::json to_json(const TraceConfig& c);
TraceConfig trace_config_from_json(const nlohmann::json& j, TraceConfig base = {});

class BadRank : public std::out_of_range {
 public:
  BadRank() : std::out_of_range("rank outside 1..G") {}
};

/// r_min + (G - rho) / (G - 1) * (r_max - r_min); G = 1 gives r_max.
double rank_interp(std::size_t rho, std::size_t group_size, double r_min, double r_max);

enum class TraceBranch { guess, tolerated_failure, redundant_failure, efficient_success, costly_success };
std::string_view to_string(TraceBranch b) noexcept;

TraceBranch trace_branch(std::size_t t_c, std::size_t t_s, bool r_acc, const EfficiencyReference& ref,
                         const TraceConfig& config);
double trace_tool_reward(std::size_t t_c, std::size_t t_s, bool r_acc, const EfficiencyReference& ref,
                         std::size_t rho, const TraceConfig& config);

struct RewardBreakdown {
  double r_acc = 0.0;
  double r_fmt = 0.0;
  double r_tool = 0.0;
  double total = 0.0;
  double advantage = 0.0;
  std::size_t rank = 1;
  TraceBranch branch = TraceBranch::guess;
};

nlohmann::json to_json(const RewardBreakdown& b);

/// Min ranking by ascending t_c: tied values share the smallest position.
std::vector<std::size_t> min_ranks(const std::vector<std::size_t>& t_c);

/// Scores a group against a frozen reference; advantages are filled in.
std::vector<RewardBreakdown> group_rewards(const RolloutGroup& group, const QAItem& qa, const EfficiencyReference& ref,
                                           const Judge& judge, const TraceConfig& config);

/// Population standardization; all zeros when sigma < 1e-8.
std::vector<double> advantages(const std::vector<double>& totals);

/// Tightens a reference with one epoch's successes (t_c, t_s). Zero-call successes are ignored.
EfficiencyReference update_reference(const EfficiencyReference& ref,
                                     const std::vector<std::pair<std::size_t, std::size_t>>& successes);

double grpo_surrogate(double ratio, double advantage, const TraceConfig& config);

class DimensionMismatch : public std::invalid_argument {
 public:
  DimensionMismatch() : std::invalid_argument("distribution lengths differ") {}
};

class NotNormalized : public std::invalid_argument {
 public:
  NotNormalized() : std::invalid_argument("distribution is negative or does not sum to 1") {}
};

/// Reverse KL: sum p_i ln(p_i / q_i) with the student as p. +inf when p_i > 0 = q_i.
double opd_kl(const std::vector<double>& student, const std::vector<double>& teacher);
/// Gradient of opd_kl(softmax(logits), teacher) with respect to the logits.
std::vector<double> opd_kl_grad(const std::vector<double>& student_logits, const std::vector<double>& teacher);
std::vector<double> softmax(const std::vector<double>& logits);

/// Cap applied to infinite KL values when they enter a loss.
inline constexpr double kKlCap = 1e6;

struct TokenStep {
  double ratio = 1.0;
  std::vector<double> student;
  std::vector<double> teacher;
};

struct LossTerms {
  double grpo_term = 0.0;
  double opd_term = 0.0;
  double total = 0.0;
};

class AlignmentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// streams[i] are the completion tokens of trajectory i; r_acc[i] and advantages[i] belong to it.
LossTerms combined_loss(const std::vector<double>& r_acc, const std::vector<double>& advantages,
                        const std::vector<std::vector<TokenStep>>& streams, const TraceConfig& config);

}  // namespace hypereyes
