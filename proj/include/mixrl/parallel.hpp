#pragma once

#include <atomic>
#include <functional>
#include <thread>
#include <vector>

namespace mixrl {

// Runs fn(i) for i in [0, n) across up to `jobs` threads. Work items must be
// independent; each writes into its own output slot, so results are
// deterministic regardless of scheduling. jobs <= 1 runs inline.
inline void parallel_for(long n, int jobs, const std::function<void(long)>& fn) {
  if (jobs <= 1 || n <= 1) {
    for (long i = 0; i < n; ++i) fn(i);
    return;
  }
  int workers = static_cast<int>(jobs < n ? jobs : n);
  std::atomic<long> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        long i = next.fetch_add(1);
        if (i >= n) return;
        fn(i);
      }
    });
  }
  for (auto& t : pool) t.join();
}

inline int default_jobs() {
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

}  // namespace mixrl
