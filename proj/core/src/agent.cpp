#include "hypereyes/agent.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

namespace hypereyes {

Trajectory rollout(const Policy& policy, const Environment& env, const QAItem& qa, std::uint64_t rng_seed) {
  Trajectory traj;
  traj.qa_id = qa.id;
  traj.question = qa.question;
  traj.rng_seed = rng_seed;

  auto state = env.start(qa, rng_seed);
  Rng policy_rng(derive_seed(rng_seed, "policy"));
  while (!state.terminal) {
    TurnRecord rec;
    try {
      const PolicyContext ctx{qa, traj.turns, env.config().max_turns};
      rec.raw = policy.next_turn(ctx, policy_rng);
    } catch (const std::exception& e) {
      rec.raw.clear();
      rec.format_error = FormatError{FormatErrorKind::malformed_json, std::string("policy failed: ") + e.what()};
    }
    StepOutcome outcome;
    if (!rec.format_error) {
      auto parsed = parse_turn(rec.raw);
      if (parsed.ok()) rec.parsed = parsed.turn();
      else rec.format_error = parsed.error();
    }
    outcome = rec.parsed ? env.step(state, *rec.parsed) : env.step_invalid(state, *rec.format_error);
    rec.observation = std::move(outcome.observation);
    traj.turns.push_back(std::move(rec));
  }
  traj.terminal_reason = state.terminal->reason;
  traj.final_answer = state.terminal->answer;
  const auto acc = account(traj.turns);
  traj.t_c = state.t_c;
  traj.t_s = state.t_s;
  traj.n_tok = acc.n_tok;
  return traj;
}

void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> workers;
  for (std::size_t w = 0; w < jobs; ++w) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : workers) t.join();
  if (failure) std::rethrow_exception(failure);
}

RolloutGroup rollout_group(const Policy& policy, const Environment& env, const QAItem& qa, std::size_t group_size,
                           std::uint64_t seed, std::size_t jobs) {
  RolloutGroup group;
  group.qa_id = qa.id;
  group.trajectories.resize(group_size);
  parallel_for(group_size, jobs,
               [&](std::size_t i) { group.trajectories[i] = rollout(policy, env, qa, derive_seed(seed, i)); });
  return group;
}

}  // namespace hypereyes
