#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hypereyes/agent.hpp"
#include "hypereyes/eval.hpp"
#include "hypereyes/reward.hpp"
#include "hypereyes/trajectory.hpp"

namespace hypereyes {

enum class QualityFilter { format, info_gain, grounded, sequential_shortcut, image_only };
std::string_view to_string(QualityFilter f) noexcept;
std::optional<QualityFilter> quality_filter_from_string(std::string_view s) noexcept;

/// The four trajectory-quality filters; image_only is an opt-in corpus-shaping filter.
std::set<QualityFilter> default_filters();

struct CurationConfig {
  std::vector<std::size_t> budgets{2, 4, 8};  // max model turns per rollout, ascending
  std::size_t k = 5;                          // rollouts per budget
  std::set<QualityFilter> filters = default_filters();

  void validate() const;
};

struct PrsSample {
  std::size_t budget = 0;
  std::size_t attempt = 0;
  std::uint64_t seed = 0;
  bool accepted = false;
  Trajectory trajectory;
};

/// Every rollout PRS executed, in order, plus the chosen one (index into samples) if any.
struct PrsOutcome {
  std::vector<PrsSample> samples;
  std::optional<std::size_t> selected;
  std::optional<std::size_t> budget;  // budget the selection came from

  [[nodiscard]] bool rejected() const noexcept { return !selected.has_value(); }
  [[nodiscard]] const Trajectory& trajectory() const { return samples.at(selected.value()).trajectory; }
};

/// Progressive rejection sampling: budgets in ascending order, K rollouts each; stops at the first
/// budget with an accepted rollout and returns the one with fewest tool-call rounds (earliest on ties).
PrsOutcome prs(const QAItem& qa, const Policy& policy, const Environment& env, const Judge& judge,
               const CurationConfig& config, std::uint64_t seed, std::size_t jobs = 1);

struct QualityVerdict {
  bool keep = true;
  std::vector<std::string> reasons;  // every failing code, in filter order
};

QualityVerdict quality_pipeline(const Trajectory& traj, const WorldFixture& world,
                                const std::set<QualityFilter>& filters = default_filters());

struct CuratedItem {
  std::string qa_id;
  std::optional<Trajectory> trajectory;  // set when kept
  bool prs_rejected = false;
  std::vector<std::string> drop_reasons;
};

/// PRS followed by the quality pipeline for each item.
std::vector<CuratedItem> curate_corpus(const std::vector<QAItem>& items, const Policy& policy, const Environment& env,
                                       const Judge& judge, const CurationConfig& config, std::uint64_t seed,
                                       std::size_t jobs = 1);

inline constexpr std::size_t kRlAttempts = 5;

struct RlSample {
  std::string qa_id;
  EfficiencyReference reference;
  Trajectory seed_trajectory;
};

/// Seed of attempt `attempt` (0-based) for an item; attempt 0 is the pass@1 attempt.
std::uint64_t rl_attempt_seed(std::uint64_t seed, std::string_view qa_id, std::size_t attempt);

/// Keeps items whose first attempt fails and some later attempt of the five passes with at least one
/// tool call; the reference comes from the first such attempt.
std::vector<RlSample> select_rl_set(const std::vector<QAItem>& items, const Policy& policy, const Environment& env,
                                    const Judge& judge, std::uint64_t seed, std::size_t jobs = 1);

nlohmann::json to_json(const EfficiencyReference& ref);
EfficiencyReference efficiency_reference_from_json(const nlohmann::json& j);

/// Sidecar lines: {"qa_id", "t_c_hat", "t_s_hat"}.
void write_reference_sidecar(std::ostream& out, const std::map<std::string, EfficiencyReference>& refs);
std::map<std::string, EfficiencyReference> read_reference_sidecar(std::istream& in);

}  // namespace hypereyes
