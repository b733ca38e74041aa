#pragma once

// Deterministic data parallelism: work item i always writes slot i, so results
// never depend on the number of workers or on scheduling.

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <limits>
#include <string>
#include <thread>
#include <vector>

namespace hetlab {

/// Worker count: `requested` if positive, else $HETLAB_THREADS, else the
/// hardware concurrency (at least 1).
inline int resolve_threads(int requested = 0) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("HETLAB_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return n;
    } catch (const std::exception&) {
    }
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Calls body(i) for i in [0, n) on up to `threads` workers, each owning a
/// contiguous block of indices. If any call throws, the exception of the
/// lowest failing index is rethrown after all workers finish.
template <typename Body>
void parallel_for(std::size_t n, int threads, Body&& body) {
  if (n == 0) return;
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, threads)));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::size_t> error_index(workers, std::numeric_limits<std::size_t>::max());
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = n * w / workers;
    const std::size_t end = n * (w + 1) / workers;
    pool.emplace_back([&, w, begin, end] {
      for (std::size_t i = begin; i < end; ++i) {
        try {
          body(i);
        } catch (...) {
          errors[w] = std::current_exception();
          error_index[w] = i;
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  std::size_t first = workers;
  for (std::size_t w = 0; w < workers; ++w)
    if (errors[w] && (first == workers || error_index[w] < error_index[first])) first = w;
  if (first != workers) std::rethrow_exception(errors[first]);
}

}  // namespace hetlab
