#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace hypereyes {

/// One request's life on the simulated clock, in milliseconds from batch submission.
struct DispatchSlot {
  double start_ms = 0.0;
  double finish_ms = 0.0;
  bool timed_out = false;
};

struct DispatchTrace {
  std::vector<DispatchSlot> requests;  // request order
  double makespan_ms = 0.0;
  std::size_t max_in_flight = 0;
};

// Bounded in-flight window on a virtual clock. Requests are admitted FIFO as slots free
// up; a request whose latency exceeds timeout_ms is cut off at start + timeout_ms and
// flagged as timed out. All requests are submitted at t = 0.
DispatchTrace simulate_dispatch(std::span<const double> latencies_ms, std::size_t concurrency_limit,
                                double timeout_ms);

/// Peak overlap of half-open [start, finish) intervals.
std::size_t peak_concurrency(std::span<const DispatchSlot> slots);

}  // namespace hypereyes
