#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hypereyes/curate.hpp"
#include "hypereyes/reward.hpp"

namespace hypereyes {

/// Per-query references. Written only at epoch boundaries.
struct ReferenceTable {
  std::map<std::string, EfficiencyReference> current;
  std::map<std::string, EfficiencyReference> initial;

  static ReferenceTable from_rl_set(const std::vector<RlSample>& rl_set);
};

struct QueryEpoch {
  std::string qa_id;
  EfficiencyReference before;
  EfficiencyReference after;
  std::vector<RewardBreakdown> rewards;
  std::vector<std::pair<std::size_t, std::size_t>> usage;  // (t_c, t_s) per rollout
  std::size_t positive = 0;                // rollouts with R_tool > 0 under `before`
  std::size_t positive_under_initial = 0;  // same rollouts scored against the initial reference
};

struct EpochReport {
  std::size_t epoch = 0;
  std::vector<QueryEpoch> queries;
  std::size_t rollouts = 0;
  double acc = 0.0;
  double mean_total = 0.0;
  double mean_r_tool = 0.0;
  double positive_fraction = 0.0;
  double positive_fraction_initial = 0.0;
  double mean_tc_positive = 0.0;  // over rollouts with R_tool > 0; 0 when there are none
};

/// One simulated epoch: a group of G rollouts per RL sample scored against the frozen references,
/// then one reference update per query from the epoch's successes.
EpochReport train_epoch_sim(const std::vector<RlSample>& rl_set, const std::vector<QAItem>& items,
                            const Policy& policy, const Environment& env, const Judge& judge,
                            const TraceConfig& config, ReferenceTable& refs, std::uint64_t seed, std::size_t epoch,
                            std::size_t jobs = 1);

std::vector<EpochReport> train_sim(const std::vector<RlSample>& rl_set, const std::vector<QAItem>& items,
                                   const Policy& policy, const Environment& env, const Judge& judge,
                                   const TraceConfig& config, std::size_t epochs, std::uint64_t seed,
                                   std::size_t jobs = 1);

/// One line-delimited record per query.
std::vector<nlohmann::json> epoch_records(const EpochReport& report);
nlohmann::json epoch_summary(const EpochReport& report);

}  // namespace hypereyes
