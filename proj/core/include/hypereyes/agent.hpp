#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "hypereyes/env.hpp"
#include "hypereyes/synth.hpp"
#include "hypereyes/trajectory.hpp"

namespace hypereyes {

/// What a policy sees before emitting a turn.
struct PolicyContext {
  const QAItem& qa;
  const std::vector<TurnRecord>& history;
  std::size_t max_turns = 0;
};

/// Emits the raw text of the next turn. Must be deterministic given (context, rng state);
/// implementations keep no per-rollout state so one instance can serve parallel rollouts.
class Policy {
 public:
  virtual ~Policy() = default;
  [[nodiscard]] virtual std::string name() const = 0;
  virtual std::string next_turn(const PolicyContext& ctx, Rng& rng) const = 0;
};

/// Runs parse -> step until terminal. A policy that throws is recorded as emitting a malformed turn.
Trajectory rollout(const Policy& policy, const Environment& env, const QAItem& qa, std::uint64_t rng_seed);

struct RolloutGroup {
  std::string qa_id;
  std::vector<Trajectory> trajectories;
};

/// G rollouts with seeds derive_seed(seed, i); `jobs` bounds worker threads.
RolloutGroup rollout_group(const Policy& policy, const Environment& env, const QAItem& qa, std::size_t group_size,
                           std::uint64_t seed, std::size_t jobs = 1);

/// Runs fn(i) for i in [0, n) on up to `jobs` threads.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn);

// Scripted policies. The oracles read the scene spec and the fixture, standing in for a
// trained model so that every downstream algorithm can be exercised.

/// Grounds every cell in one image_search, batches all text queries in one round, answers.
class ParallelOracle final : public Policy {
 public:
  explicit ParallelOracle(const WorldFixture& world) : world_(world) {}
  [[nodiscard]] std::string name() const override { return "parallel_oracle"; }
  std::string next_turn(const PolicyContext& ctx, Rng& rng) const override;

 private:
  const WorldFixture& world_;
};

/// One region or one query per round.
class SerialOracle final : public Policy {
 public:
  explicit SerialOracle(const WorldFixture& world) : world_(world) {}
  [[nodiscard]] std::string name() const override { return "serial_oracle"; }
  std::string next_turn(const PolicyContext& ctx, Rng& rng) const override;

 private:
  const WorldFixture& world_;
};

/// Parallel oracle that repeats every text query `duplicates` times in its single text round.
class Spammer final : public Policy {
 public:
  Spammer(const WorldFixture& world, std::size_t duplicates = 3) : world_(world), duplicates_(duplicates) {}
  [[nodiscard]] std::string name() const override { return "spammer"; }
  std::string next_turn(const PolicyContext& ctx, Rng& rng) const override;

 private:
  const WorldFixture& world_;
  std::size_t duplicates_;
};

/// Answers immediately, never calling a tool.
class Guesser final : public Policy {
 public:
  explicit Guesser(std::string guess = "unknown") : guess_(std::move(guess)) {}
  [[nodiscard]] std::string name() const override { return "guesser"; }
  std::string next_turn(const PolicyContext& ctx, Rng& rng) const override;

 private:
  std::string guess_;
};

struct StochasticParams {
  double p_skill = 0.7;     // chance of batching a whole phase into one call
  double steepness = 10.0;  // logistic slope of success vs. evidence coverage
  double midpoint = 0.5;    // coverage at which success probability is 1/2
};

/// Randomly mixes parallel and serial behaviour and sometimes answers early; answers
/// correctly with probability logistic(steepness * (coverage - midpoint)).
class Stochastic final : public Policy {
 public:
  Stochastic(const WorldFixture& world, StochasticParams params) : world_(world), params_(params) {}
  [[nodiscard]] std::string name() const override { return "stochastic"; }
  std::string next_turn(const PolicyContext& ctx, Rng& rng) const override;

  /// Fraction of required entities whose attribute evidence appears in the history.
  [[nodiscard]] double coverage(const PolicyContext& ctx) const;
  [[nodiscard]] double success_probability(double coverage) const;

 private:
  const WorldFixture& world_;
  StochasticParams params_;
};

/// Builds a policy from "name" or "name:key=value,key=value".
/// Names: parallel_oracle, serial_oracle, spammer(dup), guesser(guess), stochastic(p_skill, steepness, midpoint).
std::unique_ptr<Policy> make_policy(std::string_view spec, const WorldFixture& world);

}  // namespace hypereyes
