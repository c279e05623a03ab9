#include "hypereyes/curate.hpp"

#include <istream>
#include <ostream>
#include <stdexcept>

namespace hypereyes {

using json = nlohmann::json;

std::string_view to_string(QualityFilter f) noexcept {
  switch (f) {
    case QualityFilter::format: return "format";
    case QualityFilter::info_gain: return "info_gain";
    case QualityFilter::grounded: return "grounded";
    case QualityFilter::sequential_shortcut: return "sequential_shortcut";
    case QualityFilter::image_only: return "image_only";
  }
  return "unknown";
}

std::optional<QualityFilter> quality_filter_from_string(std::string_view s) noexcept {
  for (auto f : {QualityFilter::format, QualityFilter::info_gain, QualityFilter::grounded,
                 QualityFilter::sequential_shortcut, QualityFilter::image_only})
    if (to_string(f) == s) return f;
  return std::nullopt;
}

std::set<QualityFilter> default_filters() {
  return {QualityFilter::format, QualityFilter::info_gain, QualityFilter::grounded, QualityFilter::sequential_shortcut};
}

void CurationConfig::validate() const {
  if (budgets.empty()) throw std::invalid_argument("at least one budget is required");
  for (std::size_t i = 0; i < budgets.size(); ++i) {
    if (budgets[i] < 1) throw std::invalid_argument("budgets must be >= 1");
    if (i > 0 && budgets[i] <= budgets[i - 1]) throw std::invalid_argument("budgets must be strictly ascending");
  }
  if (k < 1) throw std::invalid_argument("K must be >= 1");
}

PrsOutcome prs(const QAItem& qa, const Policy& policy, const Environment& env, const Judge& judge,
               const CurationConfig& config, std::uint64_t seed, std::size_t jobs) {
  config.validate();
  PrsOutcome out;
  const auto item_seed = derive_seed(seed, qa.id);
  for (const auto budget : config.budgets) {
    auto cfg = env.config();
    cfg.max_turns = budget;
    const auto budget_env = env.with_config(cfg);
    const auto budget_seed = derive_seed(item_seed, budget);

    std::vector<PrsSample> batch(config.k);
    parallel_for(config.k, jobs, [&](std::size_t a) {
      auto& s = batch[a];
      s.budget = budget;
      s.attempt = a;
      s.seed = derive_seed(budget_seed, a);
      s.trajectory = rollout(policy, budget_env, qa, s.seed);
      s.accepted = judged_correct(judge, s.trajectory, qa);
    });

    const auto first = out.samples.size();
    for (auto& s : batch) out.samples.push_back(std::move(s));
    for (auto i = first; i < out.samples.size(); ++i) {
      if (!out.samples[i].accepted) continue;
      if (!out.selected || out.samples[i].trajectory.t_c < out.samples[*out.selected].trajectory.t_c) out.selected = i;
    }
    if (out.selected) {
      out.budget = budget;
      return out;
    }
  }
  return out;
}

QualityVerdict quality_pipeline(const Trajectory& traj, const WorldFixture& world,
                                const std::set<QualityFilter>& filters) {
  QualityVerdict v;
  auto apply = [&](QualityFilter f, const FilterVerdict& r) {
    if (!filters.count(f) || r.pass) return;
    v.keep = false;
    v.reasons.push_back(r.reason);
  };
  if (filters.count(QualityFilter::format)) apply(QualityFilter::format, check_format(traj));
  if (filters.count(QualityFilter::info_gain)) apply(QualityFilter::info_gain, check_info_gain(traj));
  if (filters.count(QualityFilter::grounded)) apply(QualityFilter::grounded, check_grounded(traj, world));
  if (filters.count(QualityFilter::sequential_shortcut))
    apply(QualityFilter::sequential_shortcut, check_sequential_shortcut(traj));
  if (filters.count(QualityFilter::image_only)) apply(QualityFilter::image_only, check_image_only(traj, world));
  return v;
}

std::vector<CuratedItem> curate_corpus(const std::vector<QAItem>& items, const Policy& policy, const Environment& env,
                                       const Judge& judge, const CurationConfig& config, std::uint64_t seed,
                                       std::size_t jobs) {
  std::vector<CuratedItem> out(items.size());
  parallel_for(items.size(), jobs, [&](std::size_t i) {
    auto& item = out[i];
    item.qa_id = items[i].id;
    const auto outcome = prs(items[i], policy, env, judge, config, seed);
    if (outcome.rejected()) {
      item.prs_rejected = true;
      item.drop_reasons.emplace_back("prs_rejected");
      return;
    }
    const auto verdict = quality_pipeline(outcome.trajectory(), env.world(), config.filters);
    if (verdict.keep) item.trajectory = outcome.trajectory();
    else item.drop_reasons = verdict.reasons;
  });
  return out;
}

std::uint64_t rl_attempt_seed(std::uint64_t seed, std::string_view qa_id, std::size_t attempt) {
  return derive_seed(derive_seed(derive_seed(seed, "rl"), qa_id), attempt);
}

std::vector<RlSample> select_rl_set(const std::vector<QAItem>& items, const Policy& policy, const Environment& env,
                                    const Judge& judge, std::uint64_t seed, std::size_t jobs) {
  std::vector<std::optional<RlSample>> picked(items.size());
  parallel_for(items.size(), jobs, [&](std::size_t i) {
    const auto& qa = items[i];
    const auto first = rollout(policy, env, qa, rl_attempt_seed(seed, qa.id, 0));
    if (judged_correct(judge, first, qa)) return;
    for (std::size_t a = 1; a < kRlAttempts; ++a) {
      auto traj = rollout(policy, env, qa, rl_attempt_seed(seed, qa.id, a));
      if (!judged_correct(judge, traj, qa) || traj.t_c == 0) continue;
      picked[i] = RlSample{qa.id, {traj.t_c, std::max(traj.t_s, traj.t_c)}, std::move(traj)};
      return;
    }
  });
  std::vector<RlSample> out;
  for (auto& p : picked)
    if (p) out.push_back(std::move(*p));
  return out;
}

json to_json(const EfficiencyReference& ref) { return {{"t_c_hat", ref.t_c_hat}, {"t_s_hat", ref.t_s_hat}}; }

EfficiencyReference efficiency_reference_from_json(const json& j) {
  EfficiencyReference ref{j.at("t_c_hat").get<std::size_t>(), j.at("t_s_hat").get<std::size_t>()};
  if (!ref.valid()) throw std::invalid_argument("reference must satisfy t_s_hat >= t_c_hat >= 1");
  return ref;
}

void write_reference_sidecar(std::ostream& out, const std::map<std::string, EfficiencyReference>& refs) {
  for (const auto& [id, ref] : refs) {
    auto j = to_json(ref);
    j["qa_id"] = id;
    out << j.dump() << '\n';
  }
}

std::map<std::string, EfficiencyReference> read_reference_sidecar(std::istream& in) {
  std::map<std::string, EfficiencyReference> refs;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto j = json::parse(line);
    refs[j.at("qa_id").get<std::string>()] = efficiency_reference_from_json(j);
  }
  return refs;
}

}  // namespace hypereyes
