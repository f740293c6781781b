#pragma once

#include <atomic>
#include <cstdint>
#include <thread>
#include <vector>

namespace exclab {

inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// Runs fn(replica_index) for indices [0, count) on a small worker pool and
// returns the results in index order.  Each replica derives its own RNG
// stream from its index, so the output is identical for any thread count.
template <class Fn>
auto run_replicas(int count, int threads, Fn&& fn) {
  using Result = decltype(fn(0));
  std::vector<Result> results(static_cast<std::size_t>(count));
  threads = std::min(resolve_threads(threads), count);
  if (threads <= 1) {
    for (int i = 0; i < count; ++i) results[static_cast<std::size_t>(i)] = fn(i);
    return results;
  }
  std::atomic<int> next{0};
  auto worker = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= count) return;
      results[static_cast<std::size_t>(i)] = fn(i);
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return results;
}

}  // namespace exclab
