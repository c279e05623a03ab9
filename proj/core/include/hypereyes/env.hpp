#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "hypereyes/dispatch.hpp"
#include "hypereyes/rng.hpp"
#include "hypereyes/schema.hpp"
#include "hypereyes/synth.hpp"
#include "hypereyes/world.hpp"

namespace hypereyes {

inline constexpr std::size_t kTextTopK = 3;

struct EnvConfig {
  std::size_t max_tool_calls = 8;
  std::size_t max_turns = 9;
  std::size_t concurrency_limit = 64;
  double request_timeout_ms = 30000.0;
  double per_request_latency_ms = 1000.0;
  double latency_jitter_ms = 0.0;  // each request adds U[0, jitter)
  double misidentify_prob = 0.0;
  double iou_threshold = 0.5;
  std::uint64_t rng_seed = 0;

  /// 8 tool invocations / 9 model turns / 64 in-flight requests.
  static EnvConfig training();
  /// 18 tool invocations / 19 model turns.
  static EnvConfig evaluation();

  /// Throws std::invalid_argument when an invariant is violated.
  void validate() const;
};

nlohmann::json to_json(const EnvConfig& c);
/// Fields absent from `j` keep their value in `base`.
EnvConfig env_config_from_json(const nlohmann::json& j, EnvConfig base = {});

struct SearchResult {
  std::string title;
  std::string snippet;
  std::string link;
  std::optional<std::string> source_entity;

  friend bool operator==(const SearchResult&, const SearchResult&) = default;
};

enum class RequestStatus { ok, no_match, timeout };
std::string_view to_string(RequestStatus s) noexcept;

/// Outcome of one backend request (one region or one query).
struct RequestResult {
  std::size_t index = 0;
  RequestStatus status = RequestStatus::ok;
  std::vector<SearchResult> results;

  friend bool operator==(const RequestResult&, const RequestResult&) = default;
};

struct Observation {
  std::vector<RequestResult> per_call_results;  // request order
  std::size_t tokens_consumed = 0;
  double elapsed_ms = 0.0;
  std::optional<std::string> format_error;  // set for format-invalid turns

  friend bool operator==(const Observation&, const Observation&) = default;
};

/// Text the policy sees for an observation.
std::string render_observation(const Observation& obs);
nlohmann::json to_json(const Observation& obs);
Observation observation_from_json(const nlohmann::json& j);

/// Where search requests are answered. The repository ships the fixture backend only.
class SearchBackend {
 public:
  virtual ~SearchBackend() = default;
  /// `region` absent means whole-image search.
  virtual RequestResult image_request(const MosaicSpec* scene, std::string_view image_id,
                                      const std::optional<Region>& region, Rng& rng) const = 0;
  virtual RequestResult text_request(std::string_view query, Rng& rng) const = 0;
};

class FixtureBackend final : public SearchBackend {
 public:
  FixtureBackend(const WorldFixture& world, double misidentify_prob, double iou_threshold)
      : world_(world), misidentify_prob_(misidentify_prob), iou_threshold_(iou_threshold) {}

  RequestResult image_request(const MosaicSpec* scene, std::string_view image_id, const std::optional<Region>& region,
                              Rng& rng) const override;
  RequestResult text_request(std::string_view query, Rng& rng) const override;

 private:
  const WorldFixture& world_;
  double misidentify_prob_;
  double iou_threshold_;
};

/// Result of a batched search: request-ordered results plus the simulated schedule.
struct BatchResult {
  std::vector<RequestResult> results;
  DispatchTrace trace;
};

BatchResult image_search(const WorldFixture& world, const MosaicSpec& scene,
                         const std::optional<std::vector<Region>>& regions, const EnvConfig& config, Rng& rng);
BatchResult text_search(const WorldFixture& world, const std::vector<std::string>& queries, const EnvConfig& config,
                        Rng& rng);

enum class TerminalReason { answer, budget_exhausted, max_turns, format_abort };
std::string_view to_string(TerminalReason r) noexcept;
std::optional<TerminalReason> terminal_reason_from_string(std::string_view s) noexcept;

struct Terminal {
  TerminalReason reason;
  std::optional<std::string> answer;
};

/// Single-owner per rollout.
struct RolloutState {
  const QAItem* qa = nullptr;
  std::size_t model_turns = 0;
  std::size_t invalid_turns = 0;
  std::size_t t_c = 0;
  std::size_t t_s = 0;
  std::optional<Terminal> terminal;
  Rng rng{0};
};

/// Either an observation (the rollout continues) or the terminal state.
struct StepOutcome {
  std::optional<Observation> observation;
  std::optional<Terminal> terminal;
};

class Environment {
 public:
  Environment(const WorldFixture& world, EnvConfig config);
  Environment(const WorldFixture& world, EnvConfig config, std::shared_ptr<const SearchBackend> backend);

  [[nodiscard]] const EnvConfig& config() const noexcept { return config_; }
  [[nodiscard]] const WorldFixture& world() const noexcept { return world_; }
  /// Same world and backend, different config (e.g. a tighter turn budget).
  [[nodiscard]] Environment with_config(EnvConfig config) const;

  [[nodiscard]] RolloutState start(const QAItem& qa, std::uint64_t seed) const;

  /// Executes one valid turn.
  StepOutcome step(RolloutState& state, const TurnBlock& turn) const;
  /// Records a format-invalid turn: consumes a model turn, zero invocations.
  StepOutcome step_invalid(RolloutState& state, const FormatError& error) const;

  /// Executes a call without budget checks.
  Observation execute(const ToolInvocation& call, const QAItem* qa, Rng& rng) const;

 private:
  const WorldFixture& world_;
  EnvConfig config_;
  std::shared_ptr<const SearchBackend> backend_;
};

class InsufficientDistractors : public std::invalid_argument {
 public:
  InsufficientDistractors() : std::invalid_argument("more distractors requested than available") {}
};

/// Appends K distractors to the final request's results and shuffles that combined list.
Observation inject_distractors(const Observation& obs, const std::vector<SearchResult>& distractors, std::size_t k,
                               std::uint64_t rng_seed);

}  // namespace hypereyes
