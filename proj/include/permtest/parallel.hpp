#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <limits>
#include <thread>
#include <vector>

namespace permtest {

/// Resolves a requested worker count; 0 means one per hardware thread.
inline unsigned resolve_workers(unsigned requested) {
  if (requested != 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

/// Runs fn(i) for i in [0, count) on up to `workers` threads using a static
/// contiguous partition. When several indices throw, the exception raised by
/// the smallest index is rethrown, so failures are reported identically for
/// any worker count.
template <class Fn>
void parallel_for(std::size_t count, unsigned workers, Fn&& fn) {
  workers = resolve_workers(workers);
  if (count == 0) return;
  const std::size_t threads = std::min<std::size_t>(workers, count);
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }

  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::size_t> error_index(threads, std::numeric_limits<std::size_t>::max());
  std::vector<std::thread> pool;
  pool.reserve(threads);
  const std::size_t chunk = count / threads;
  const std::size_t extra = count % threads;
  std::size_t begin = 0;
  for (std::size_t t = 0; t < threads; ++t) {
    const std::size_t end = begin + chunk + (t < extra ? 1 : 0);
    pool.emplace_back([&, t, begin, end] {
      std::size_t i = begin;
      try {
        for (; i < end; ++i) fn(i);
      } catch (...) {
        errors[t] = std::current_exception();
        error_index[t] = i;
      }
    });
    begin = end;
  }
  for (auto& th : pool) th.join();

  std::size_t first = threads;
  for (std::size_t t = 0; t < threads; ++t) {
    if (errors[t] && (first == threads || error_index[t] < error_index[first])) first = t;
  }
  if (first != threads) std::rethrow_exception(errors[first]);
}

}  // namespace permtest
