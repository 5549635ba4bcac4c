#pragma once

#include <atomic>
#include <cstdint>
#include <thread>
#include <vector>

namespace perco {

// Runs fn(trial_index) for every index in [0, trials). Each trial writes
// only its own preallocated slot, so results are identical for any worker
// count or schedule.
template <typename F>
void run_trials(std::int64_t trials, int workers, F&& fn) {
  if (workers <= 1 || trials <= 1) {
    for (std::int64_t i = 0; i < trials; ++i) fn(i);
    return;
  }
  std::atomic<std::int64_t> next{0};
  auto work = [&] {
    while (true) {
      std::int64_t i = next.fetch_add(1);
      if (i >= trials) break;
      fn(i);
    }
  };
  std::vector<std::thread> pool;
  int n = std::min<std::int64_t>(workers, trials);
  pool.reserve(n);
  for (int t = 0; t < n; ++t) pool.emplace_back(work);
  for (auto& th : pool) th.join();
}

}  // namespace perco
