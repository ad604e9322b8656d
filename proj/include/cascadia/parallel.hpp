#pragma once

#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace cascadia {

// Splits [begin, end) into at most `threads` contiguous chunks and runs
// chunk_fn(lo, hi, worker) on each. Workers must only touch disjoint state;
// callers merge in worker order so results never depend on scheduling.
// The first worker exception (by worker index) is rethrown after the join.
inline void parallel_chunks(long begin, long end, int threads,
                            const std::function<void(long, long, int)>& chunk_fn) {
  const long total = end - begin;
  if (total <= 0) return;
  int workers = threads < 1 ? 1 : threads;
  if (workers > total) workers = static_cast<int>(total);
  if (workers == 1) {
    chunk_fn(begin, end, 0);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    const long lo = begin + total * w / workers;
    const long hi = begin + total * (w + 1) / workers;
    pool.emplace_back([&chunk_fn, &errors, lo, hi, w] {
      try {
        chunk_fn(lo, hi, w);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (const auto& error : errors) {
    if (error) std::rethrow_exception(error);
  }
}

inline int resolve_thread_count(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("CASCADIA_THREADS")) {
    const int parsed = std::atoi(env);
    if (parsed > 0) return parsed;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace cascadia
