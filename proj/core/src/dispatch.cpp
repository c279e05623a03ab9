#include "hypereyes/dispatch.hpp"

#include <algorithm>
#include <functional>
#include <queue>
#include <stdexcept>
#include <utility>

namespace hypereyes {

DispatchTrace simulate_dispatch(std::span<const double> latencies_ms, std::size_t concurrency_limit,
                                double timeout_ms) {
  if (concurrency_limit == 0) throw std::invalid_argument("concurrency_limit must be >= 1");
  DispatchTrace trace;
  trace.requests.reserve(latencies_ms.size());

  // (time the slot frees up, slot id); ties resolve to the lowest slot id.
  using Free = std::pair<double, std::size_t>;
  std::priority_queue<Free, std::vector<Free>, std::greater<>> slots;
  for (std::size_t s = 0; s < std::min(concurrency_limit, latencies_ms.size()); ++s) slots.emplace(0.0, s);

  for (double latency : latencies_ms) {
    if (latency < 0.0) throw std::invalid_argument("latency must be non-negative");
    auto [free_at, slot] = slots.top();
    slots.pop();
    DispatchSlot r;
    r.start_ms = free_at;
    r.timed_out = latency > timeout_ms;
    r.finish_ms = free_at + (r.timed_out ? timeout_ms : latency);
    trace.makespan_ms = std::max(trace.makespan_ms, r.finish_ms);
    trace.requests.push_back(r);
    slots.emplace(r.finish_ms, slot);
  }
  trace.max_in_flight = peak_concurrency(trace.requests);
  return trace;
}

std::size_t peak_concurrency(std::span<const DispatchSlot> slots) {
  std::vector<std::pair<double, int>> events;
  events.reserve(slots.size() * 2);
  for (const auto& s : slots) {
    if (s.finish_ms <= s.start_ms) continue;  // zero-length requests never overlap
    events.emplace_back(s.start_ms, +1);
    events.emplace_back(s.finish_ms, -1);
  }
  // Ends sort before starts at the same instant (half-open intervals).
  std::sort(events.begin(), events.end());
  std::size_t cur = 0, peak = 0;
  for (const auto& [t, d] : events) {
    if (d > 0) {
      ++cur;
      peak = std::max(peak, cur);
    } else {
      --cur;
    }
  }
  return peak;
}

}  // namespace hypereyes
