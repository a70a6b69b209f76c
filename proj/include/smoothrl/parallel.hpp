#pragma once
// Episode-level worker pool. Results stay deterministic because every
// episode derives its own RNG streams from (seed, index); workers must write
// only to their own index's slot.

#include <atomic>
#include <cstdint>
#include <functional>
#include <thread>
#include <vector>

namespace smoothrl {

inline int default_thread_count() {
  const unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

inline void parallel_for(std::uint64_t n, int threads,
                         const std::function<void(std::uint64_t)>& fn) {
  if (threads <= 1 || n < 2) {
    for (std::uint64_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::uint64_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::uint64_t i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= n) return;
      fn(i);
    }
  };
  std::vector<std::thread> pool;
  const int k = std::min<std::uint64_t>(threads, n);
  pool.reserve(k);
  for (int t = 0; t < k; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
}

}  // namespace smoothrl
