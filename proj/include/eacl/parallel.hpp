#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace eacl {

/// Runs fn(i) for i in [0, n) on at most `limit` threads and returns the
/// results in index order. The first exception thrown by any task is
/// rethrown after all workers stop.
template <typename T, typename Fn>
std::vector<T> bounded_map(std::size_t n, std::size_t limit, Fn&& fn) {
  std::vector<T> results(n);
  const std::size_t workers = std::min(std::max<std::size_t>(limit, 1), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) results[i] = fn(i);
    return results;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
          try {
            results[i] = fn(i);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
            next.store(n);
          }
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
  return results;
}

}  // namespace eacl
