#pragma once

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace scoretest::detail {

inline int thread_count(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("SCORETEST_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

// Static contiguous-chunk split; the body must write only to slots keyed by
// the index so results do not depend on the worker count. The first exception
// raised in a worker is rethrown on the calling thread.
inline void parallel_for(long begin, long end, int threads,
                         const std::function<void(long, long)>& body) {
  const long total = end - begin;
  if (total <= 0) return;
  const int workers = static_cast<int>(std::min<long>(thread_count(threads), total));
  if (workers <= 1) {
    body(begin, end);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::exception_ptr first_error;
  std::mutex error_mutex;
  const long chunk = (total + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const long lo = begin + w * chunk;
    const long hi = std::min(end, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&, lo, hi] {
      try {
        body(lo, hi);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace scoretest::detail
