#include "hypereyes/trainer.hpp"

#include <stdexcept>

namespace hypereyes {

using json = nlohmann::json;

ReferenceTable ReferenceTable::from_rl_set(const std::vector<RlSample>& rl_set) {
  ReferenceTable t;
  for (const auto& s : rl_set) t.current[s.qa_id] = s.reference;
  t.initial = t.current;
  return t;
}

EpochReport train_epoch_sim(const std::vector<RlSample>& rl_set, const std::vector<QAItem>& items,
                            const Policy& policy, const Environment& env, const Judge& judge,
                            const TraceConfig& config, ReferenceTable& refs, std::uint64_t seed, std::size_t epoch,
                            std::size_t jobs) {
  config.validate();
  std::map<std::string, const QAItem*> by_id;
  for (const auto& qa : items) by_id[qa.id] = &qa;

  EpochReport report;
  report.epoch = epoch;
  report.queries.resize(rl_set.size());
  const auto epoch_seed = derive_seed(seed, epoch);
  // References are read-only here; every query's update waits for the barrier below.
  parallel_for(rl_set.size(), jobs, [&](std::size_t i) {
    const auto& sample = rl_set[i];
    auto it = by_id.find(sample.qa_id);
    if (it == by_id.end()) throw std::invalid_argument("RL sample without a QA item: " + sample.qa_id);
    const auto& qa = *it->second;
    auto& q = report.queries[i];
    q.qa_id = sample.qa_id;
    q.before = refs.current.at(sample.qa_id);
    const auto group = rollout_group(policy, env, qa, config.group_size, derive_seed(epoch_seed, sample.qa_id));
    q.rewards = group_rewards(group, qa, q.before, judge, config);
    const auto initial = group_rewards(group, qa, refs.initial.at(sample.qa_id), judge, config);
    for (std::size_t g = 0; g < group.trajectories.size(); ++g) {
      q.usage.emplace_back(group.trajectories[g].t_c, group.trajectories[g].t_s);
      q.positive += q.rewards[g].r_tool > 0.0 ? 1 : 0;
      q.positive_under_initial += initial[g].r_tool > 0.0 ? 1 : 0;
    }
  });

  double positive_tc = 0.0;
  std::size_t positive = 0;
  std::size_t positive_initial = 0;
  for (auto& q : report.queries) {
    std::vector<std::pair<std::size_t, std::size_t>> successes;
    for (std::size_t g = 0; g < q.rewards.size(); ++g) {
      const auto& r = q.rewards[g];
      if (r.r_acc > 0.0) successes.push_back(q.usage[g]);
      report.acc += r.r_acc;
      report.mean_total += r.total;
      report.mean_r_tool += r.r_tool;
      if (r.r_tool > 0.0) positive_tc += static_cast<double>(q.usage[g].first);
    }
    positive += q.positive;
    positive_initial += q.positive_under_initial;
    report.rollouts += q.rewards.size();
    q.after = update_reference(q.before, successes);
    refs.current[q.qa_id] = q.after;
  }
  if (report.rollouts > 0) {
    const auto n = static_cast<double>(report.rollouts);
    report.acc /= n;
    report.mean_total /= n;
    report.mean_r_tool /= n;
    report.positive_fraction = static_cast<double>(positive) / n;
    report.positive_fraction_initial = static_cast<double>(positive_initial) / n;
  }
  if (positive > 0) report.mean_tc_positive = positive_tc / static_cast<double>(positive);
  return report;
}

std::vector<EpochReport> train_sim(const std::vector<RlSample>& rl_set, const std::vector<QAItem>& items,
                                   const Policy& policy, const Environment& env, const Judge& judge,
                                   const TraceConfig& config, std::size_t epochs, std::uint64_t seed,
                                   std::size_t jobs) {
  auto refs = ReferenceTable::from_rl_set(rl_set);
  std::vector<EpochReport> out;
  for (std::size_t e = 0; e < epochs; ++e)
    out.push_back(train_epoch_sim(rl_set, items, policy, env, judge, config, refs, seed, e, jobs));
  return out;
}

std::vector<json> epoch_records(const EpochReport& report) {
  std::vector<json> out;
  for (const auto& q : report.queries) {
    json rollouts = json::array();
    for (std::size_t g = 0; g < q.rewards.size(); ++g) {
      auto r = to_json(q.rewards[g]);
      r["t_c"] = q.usage[g].first;
      r["t_s"] = q.usage[g].second;
      rollouts.push_back(std::move(r));
    }
    out.push_back({{"qa_id", q.qa_id},
                   {"epoch", report.epoch},
                   {"reference_before", to_json(q.before)},
                   {"reference_after", to_json(q.after)},
                   {"rollouts", std::move(rollouts)}});
  }
  return out;
}

json epoch_summary(const EpochReport& r) {
  return {{"epoch", r.epoch},
          {"queries", r.queries.size()},
          {"rollouts", r.rollouts},
          {"acc", r.acc},
          {"mean_total", r.mean_total},
          {"mean_r_tool", r.mean_r_tool},
          {"positive_fraction", r.positive_fraction},
          {"positive_fraction_initial", r.positive_fraction_initial},
          {"mean_tc_positive", r.mean_tc_positive}};
}

}  // namespace hypereyes
