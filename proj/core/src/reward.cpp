#include "hypereyes/reward.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace hypereyes {

using json = nlohmann::json;

void TraceConfig::validate() const {
  auto fail = [](const char* what) { throw std::invalid_argument(what); };
  if (!(gamma > 1.0)) fail("gamma must be > 1");
  if (lambda_red < 0.0 || lambda_fmt < 0.0 || lambda_kd < 0.0) fail("penalty magnitudes must be non-negative");
  if (!(r_plus.first > 0.0 && r_plus.first <= r_plus.second)) fail("r_plus must satisfy 0 < min <= max");
  if (!(r_minus.first <= r_minus.second && r_minus.second < 0.0)) fail("r_minus must satisfy min <= max < 0");
  if (group_size < 1) fail("group_size must be >= 1");
  if (clip_low < 0.0 || clip_low >= 1.0 || clip_high < 0.0) fail("clip fractions out of range");
  if (!(dual_clip_c > 1.0)) fail("dual_clip_c must be > 1");
}

json to_json(const TraceConfig& c) {
  return {{"gamma", c.gamma},
          {"lambda_red", c.lambda_red},
          {"lambda_fmt", c.lambda_fmt},
          {"r_plus", {c.r_plus.first, c.r_plus.second}},
          {"r_minus", {c.r_minus.first, c.r_minus.second}},
          {"group_size", c.group_size},
          {"lambda_kd", c.lambda_kd},
          {"clip_low", c.clip_low},
          {"clip_high", c.clip_high},
          {"dual_clip_c", c.dual_clip_c},
          {"correct_only_ranking", c.correct_only_ranking}};
}

TraceConfig trace_config_from_json(const json& j, TraceConfig c) {
  c.gamma = j.value("gamma", c.gamma);
  c.lambda_red = j.value("lambda_red", c.lambda_red);
  c.lambda_fmt = j.value("lambda_fmt", c.lambda_fmt);
  if (j.contains("r_plus")) c.r_plus = {j["r_plus"].at(0).get<double>(), j["r_plus"].at(1).get<double>()};
  if (j.contains("r_minus")) c.r_minus = {j["r_minus"].at(0).get<double>(), j["r_minus"].at(1).get<double>()};
  c.group_size = j.value("group_size", c.group_size);
  c.lambda_kd = j.value("lambda_kd", c.lambda_kd);
  c.clip_low = j.value("clip_low", c.clip_low);
  c.clip_high = j.value("clip_high", c.clip_high);
  c.dual_clip_c = j.value("dual_clip_c", c.dual_clip_c);
  c.correct_only_ranking = j.value("correct_only_ranking", c.correct_only_ranking);
  c.validate();
  return c;
}

double rank_interp(std::size_t rho, std::size_t group_size, double r_min, double r_max) {
  if (group_size == 0 || rho < 1 || rho > group_size) throw BadRank();
  if (group_size == 1) return r_max;
  const auto g = static_cast<double>(group_size);
  return r_min + (g - static_cast<double>(rho)) / (g - 1.0) * (r_max - r_min);
}

std::string_view to_string(TraceBranch b) noexcept {
  switch (b) {
    case TraceBranch::guess: return "guess";
    case TraceBranch::tolerated_failure: return "tolerated_failure";
    case TraceBranch::redundant_failure: return "redundant_failure";
    case TraceBranch::efficient_success: return "efficient_success";
    case TraceBranch::costly_success: return "costly_success";
  }
  return "unknown";
}

TraceBranch trace_branch(std::size_t t_c, std::size_t t_s, bool r_acc, const EfficiencyReference& ref,
                         const TraceConfig& config) {
  if (r_acc) {
    if (t_c == 0) return TraceBranch::guess;
    if (t_c <= ref.t_c_hat && t_s <= ref.t_s_hat) return TraceBranch::efficient_success;
    return TraceBranch::costly_success;
  }
  const auto tc = static_cast<double>(t_c);
  const auto lo = static_cast<double>(ref.t_c_hat);
  if (tc >= lo && tc <= config.gamma * lo) return TraceBranch::tolerated_failure;
  return TraceBranch::redundant_failure;
}

namespace {

double branch_reward(TraceBranch b, std::size_t rho, std::size_t group_size, const TraceConfig& config) {
  switch (b) {
    case TraceBranch::guess:
    case TraceBranch::tolerated_failure: return 0.0;
    case TraceBranch::redundant_failure: return -config.lambda_red;
    case TraceBranch::efficient_success: return rank_interp(rho, group_size, config.r_plus.first, config.r_plus.second);
    case TraceBranch::costly_success: return rank_interp(rho, group_size, config.r_minus.first, config.r_minus.second);
  }
  return 0.0;
}

}  // namespace

double trace_tool_reward(std::size_t t_c, std::size_t t_s, bool r_acc, const EfficiencyReference& ref,
                         std::size_t rho, const TraceConfig& config) {
  return branch_reward(trace_branch(t_c, t_s, r_acc, ref, config), rho, config.group_size, config);
}

json to_json(const RewardBreakdown& b) {
  return {{"r_acc", b.r_acc}, {"r_fmt", b.r_fmt},   {"r_tool", b.r_tool},           {"total", b.total},
          {"rank", b.rank},   {"advantage", b.advantage}, {"branch", to_string(b.branch)}};
}

std::vector<std::size_t> min_ranks(const std::vector<std::size_t>& t_c) {
  std::vector<std::size_t> ranks(t_c.size());
  for (std::size_t i = 0; i < t_c.size(); ++i)
    ranks[i] = 1 + static_cast<std::size_t>(std::count_if(t_c.begin(), t_c.end(), [&](std::size_t v) { return v < t_c[i]; }));
  return ranks;
}

std::vector<RewardBreakdown> group_rewards(const RolloutGroup& group, const QAItem& qa, const EfficiencyReference& ref,
                                           const Judge& judge, const TraceConfig& config) {
  const auto& trajs = group.trajectories;
  std::vector<RewardBreakdown> out(trajs.size());
  std::vector<bool> correct(trajs.size());
  for (std::size_t i = 0; i < trajs.size(); ++i) correct[i] = judged_correct(judge, trajs[i], qa);

  // Ranking population: the whole group, or only its correct members.
  std::vector<std::size_t> members;
  for (std::size_t i = 0; i < trajs.size(); ++i)
    if (!config.correct_only_ranking || correct[i]) members.push_back(i);
  std::vector<std::size_t> member_tc;
  for (auto i : members) member_tc.push_back(trajs[i].t_c);
  const auto member_ranks = min_ranks(member_tc);
  const std::size_t population = members.empty() ? 1 : members.size();

  std::vector<double> totals;
  for (std::size_t i = 0; i < trajs.size(); ++i) {
    auto& b = out[i];
    const auto& t = trajs[i];
    auto pos = std::find(members.begin(), members.end(), i);
    b.rank = pos == members.end() ? population : member_ranks[static_cast<std::size_t>(pos - members.begin())];
    b.r_acc = correct[i] ? 1.0 : 0.0;
    b.r_fmt = check_format(t).pass ? 0.0 : -config.lambda_fmt;
    b.branch = trace_branch(t.t_c, t.t_s, correct[i], ref, config);
    b.r_tool = branch_reward(b.branch, b.rank, population, config);
    b.total = b.r_acc + b.r_fmt + b.r_tool;
    totals.push_back(b.total);
  }
  const auto adv = advantages(totals);
  for (std::size_t i = 0; i < out.size(); ++i) out[i].advantage = adv[i];
  return out;
}

std::vector<double> advantages(const std::vector<double>& totals) {
  std::vector<double> out(totals.size(), 0.0);
  if (totals.empty()) return out;
  const auto n = static_cast<double>(totals.size());
  const double mean = std::accumulate(totals.begin(), totals.end(), 0.0) / n;
  double var = 0.0;
  for (double t : totals) var += (t - mean) * (t - mean);
  const double sigma = std::sqrt(var / n);
  if (sigma < 1e-8) return out;
  for (std::size_t i = 0; i < totals.size(); ++i) out[i] = (totals[i] - mean) / sigma;
  return out;
}

EfficiencyReference update_reference(const EfficiencyReference& ref,
                                     const std::vector<std::pair<std::size_t, std::size_t>>& successes) {
  std::optional<std::size_t> best_tc;
  for (const auto& [tc, ts] : successes)
    if (tc > 0 && (!best_tc || tc < *best_tc)) best_tc = tc;
  if (!best_tc || *best_tc >= ref.t_c_hat) return ref;
  std::size_t best_ts = std::numeric_limits<std::size_t>::max();
  for (const auto& [tc, ts] : successes)
    if (tc == *best_tc) best_ts = std::min(best_ts, ts);
  return {*best_tc, std::min(ref.t_s_hat, best_ts)};
}

double grpo_surrogate(double ratio, double advantage, const TraceConfig& config) {
  const double clipped = std::clamp(ratio, 1.0 - config.clip_low, 1.0 + config.clip_high);
  const double objective = std::min(ratio * advantage, clipped * advantage);
  if (advantage < 0.0) return std::max(objective, config.dual_clip_c * advantage);
  return objective;
}

namespace {

void check_distribution(const std::vector<double>& p) {
  double sum = 0.0;
  for (double v : p) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw NotNormalized();
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw NotNormalized();
}

}  // namespace

double opd_kl(const std::vector<double>& student, const std::vector<double>& teacher) {
  if (student.size() != teacher.size()) throw DimensionMismatch();
  check_distribution(student);
  check_distribution(teacher);
  double kl = 0.0;
  for (std::size_t i = 0; i < student.size(); ++i) {
    if (student[i] == 0.0) continue;
    if (teacher[i] == 0.0) return std::numeric_limits<double>::infinity();
    kl += student[i] * std::log(student[i] / teacher[i]);
  }
  return std::max(kl, 0.0);
}

std::vector<double> softmax(const std::vector<double>& logits) {
  std::vector<double> p(logits.size());
  if (logits.empty()) return p;
  const double m = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) z += (p[i] = std::exp(logits[i] - m));
  for (auto& v : p) v /= z;
  return p;
}

std::vector<double> opd_kl_grad(const std::vector<double>& student_logits, const std::vector<double>& teacher) {
  if (student_logits.size() != teacher.size()) throw DimensionMismatch();
  check_distribution(teacher);
  const auto p = softmax(student_logits);
  double kl = 0.0;
  std::vector<double> log_ratio(p.size(), 0.0);
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    log_ratio[i] = std::log(p[i] / teacher[i]);
    kl += p[i] * log_ratio[i];
  }
  std::vector<double> grad(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) grad[i] = p[i] * (log_ratio[i] - kl);
  return grad;
}

LossTerms combined_loss(const std::vector<double>& r_acc, const std::vector<double>& advs,
                        const std::vector<std::vector<TokenStep>>& streams, const TraceConfig& config) {
  if (r_acc.size() != streams.size() || advs.size() != streams.size())
    throw AlignmentError("token streams, rewards and advantages must have one entry per trajectory");
  LossTerms out;
  double surrogate_sum = 0.0;
  std::size_t tokens = 0;
  double kl_sum = 0.0;
  std::size_t failed = 0;
  for (std::size_t i = 0; i < streams.size(); ++i) {
    double traj_kl = 0.0;
    for (const auto& step : streams[i]) {
      surrogate_sum += -grpo_surrogate(step.ratio, advs[i], config);
      ++tokens;
      if (r_acc[i] < 1.0) traj_kl += std::min(opd_kl(step.student, step.teacher), kKlCap);
    }
    if (r_acc[i] < 1.0 && !streams[i].empty()) {
      kl_sum += traj_kl / static_cast<double>(streams[i].size());
      ++failed;
    }
  }
  if (tokens > 0) out.grpo_term = surrogate_sum / static_cast<double>(tokens);
  if (failed > 0) out.opd_term = config.lambda_kd * (kl_sum / static_cast<double>(failed));
  out.total = out.grpo_term + out.opd_term;
  return out;
}

}  // namespace hypereyes
