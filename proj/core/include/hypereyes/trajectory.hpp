#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hypereyes/env.hpp"
#include "hypereyes/schema.hpp"
#include "hypereyes/text.hpp"
#include "hypereyes/world.hpp"

namespace hypereyes {

/// One model turn: what the policy emitted, how it parsed, and what came back.
struct TurnRecord {
  std::string raw;
  std::optional<TurnBlock> parsed;
  std::optional<FormatError> format_error;
  std::optional<Observation> observation;

  /// A call that passed the budget check and ran.
  [[nodiscard]] bool executed_call() const noexcept {
    return parsed && parsed->is_call() && observation && !observation->format_error;
  }
};

struct Trajectory {
  std::string qa_id;
  std::string question;
  std::uint64_t rng_seed = 0;
  std::vector<TurnRecord> turns;
  std::optional<std::string> final_answer;
  TerminalReason terminal_reason = TerminalReason::answer;
  std::size_t t_c = 0;  // executed tool-call rounds
  std::size_t t_s = 0;  // backend invocations across all rounds
  std::size_t n_tok = 0;
};

class MisalignedRecords : public std::invalid_argument {
 public:
  MisalignedRecords() : std::invalid_argument("turns and observations are not aligned") {}
};

struct Accounting {
  std::size_t t_c = 0;
  std::size_t t_s = 0;
  std::size_t n_tok = 0;

  friend bool operator==(const Accounting&, const Accounting&) = default;
};

/// n_tok counts policy text (rendered turn, or raw text for malformed turns) plus observation text.
Accounting account(std::span<const TurnRecord> turns, const Tokenizer& tokenizer = whitespace_tokenizer());
/// Variant taking observations separately; throws MisalignedRecords on a length mismatch.
Accounting account(std::span<const TurnRecord> turns, std::span<const std::optional<Observation>> observations,
                   const Tokenizer& tokenizer = whitespace_tokenizer());

/// Checks t_c/t_s/answer invariants against the record's own turns.
bool accounting_consistent(const Trajectory& traj, const Tokenizer& tokenizer = whitespace_tokenizer());

struct FilterVerdict {
  bool pass = true;
  std::string reason;  // empty on pass

  static FilterVerdict ok() { return {}; }
  static FilterVerdict fail(std::string why) { return {false, std::move(why)}; }
};

inline constexpr std::string_view kDuplicateEvidence = "duplicate_evidence";
inline constexpr std::string_view kUngroundedAnswer = "ungrounded_answer";
inline constexpr std::string_view kAvoidableSerialization = "avoidable_serialization";
inline constexpr std::string_view kImageOnly = "image_only";

/// Fails with the format error kind of the first turn that lacks a reason or has a bad action.
FilterVerdict check_format(const Trajectory& traj);
/// Fails when a request returned only snippets that an earlier call already returned.
FilterVerdict check_info_gain(const Trajectory& traj);
/// Passes when the answer is in the observations, or is a sum recomputable from observed entities.
FilterVerdict check_grounded(const Trajectory& traj, const WorldFixture& world);
/// Fails when a text query in round r >= 2 uses no token first revealed by earlier observations.
FilterVerdict check_sequential_shortcut(const Trajectory& traj);
/// Corpus-shaping filter: fails when only image_search was used and the answer is grounded.
FilterVerdict check_image_only(const Trajectory& traj, const WorldFixture& world);

/// Concatenated titles and snippets of every observation, in order.
std::string evidence_text(const Trajectory& traj);

nlohmann::json to_json(const Trajectory& traj);
Trajectory trajectory_from_json(const nlohmann::json& j);

}  // namespace hypereyes
