#pragma once

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace confined {

/// Worker count resolution: explicit > 0 wins, then the
/// CONFINED_DIFFUSION_THREADS environment variable, then all cores.
inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("CONFINED_DIFFUSION_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Static range partition over threads. Results must be written to
/// disjoint per-index slots so the outcome is independent of scheduling.
inline void parallel_for(long n, int threads,
                         const std::function<void(long, long)>& body) {
  threads = std::max(1, std::min<long>(threads, n) > 0
                            ? std::min<int>(threads, static_cast<int>(n))
                            : 1);
  if (threads <= 1 || n <= 1) {
    body(0, n);
    return;
  }
  std::vector<std::thread> pool;
  const long chunk = (n + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    const long begin = t * chunk;
    const long end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back(body, begin, end);
  }
  for (auto& th : pool) th.join();
}

}  // namespace confined
