#pragma once

#include <algorithm>
#include <exception>
#include <thread>
#include <vector>

namespace oscillab {

/// Runs fn(i) for i in [0, count) on up to `threads` workers (static striding).
/// Callers write results into per-index slots, so merges stay deterministic.
template <typename Fn>
void parallel_for(int count, int threads, Fn&& fn) {
  threads = std::clamp(threads, 1, std::max(1, count));
  if (threads == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (int i = w; i < count; i += threads) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace oscillab
