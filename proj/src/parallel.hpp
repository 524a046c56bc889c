#pragma once

#include <algorithm>
#include <cstdlib>
#include <thread>
#include <vector>

namespace stochact::detail {

/// Worker cap: STOCHACT_THREADS when set to a positive integer, otherwise the
/// hardware concurrency.
inline int thread_budget() {
  static const int budget = [] {
    if (const char* env = std::getenv("STOCHACT_THREADS")) {
      const int v = std::atoi(env);
      if (v > 0) return v;
    }
    return std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
  }();
  return budget;
}

/// Runs fn(begin, end) over [0, count) split in contiguous chunks. Chunks
/// write disjoint outputs, so results are independent of the thread count.
template <class Fn>
void parallel_for(long count, long min_chunk, Fn&& fn) {
  const long workers =
      std::min<long>(thread_budget(), std::max<long>(1, count / std::max(1L, min_chunk)));
  if (workers <= 1) {
    fn(0L, count);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  const long chunk = (count + workers - 1) / workers;
  for (long w = 1; w < workers; ++w) {
    const long begin = w * chunk;
    const long end = std::min(count, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&fn, begin, end] { fn(begin, end); });
  }
  fn(0L, std::min(count, chunk));
  for (auto& t : pool) t.join();
}

}  // namespace stochact::detail
