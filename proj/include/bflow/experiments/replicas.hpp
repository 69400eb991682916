#pragma once

#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace bflow {

inline int resolve_workers(int workers) {
  if (workers > 0) return workers;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Evaluates work(replica_index) for every replica and returns the results in
/// replica order. Workers own static index ranges and write into
/// preallocated slots; the caller folds sequentially, so aggregates do not
/// depend on the worker count or scheduling.
template <class R, class Work>
std::vector<R> map_replicas(std::size_t replicas, int workers, Work&& work) {
  std::vector<R> results(replicas);
  const int nw = std::min<std::size_t>(replicas, static_cast<std::size_t>(resolve_workers(workers)));
  if (nw <= 1) {
    for (std::size_t r = 0; r < replicas; ++r) results[r] = work(r);
    return results;
  }
  std::mutex err_mutex;
  std::exception_ptr first_error;
  std::size_t first_error_replica = replicas;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(nw));
  for (int w = 0; w < nw; ++w) {
    const std::size_t lo = replicas * static_cast<std::size_t>(w) / static_cast<std::size_t>(nw);
    const std::size_t hi = replicas * (static_cast<std::size_t>(w) + 1) / static_cast<std::size_t>(nw);
    pool.emplace_back([&, lo, hi] {
      for (std::size_t r = lo; r < hi; ++r) {
        try {
          results[r] = work(r);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mutex);
          if (r < first_error_replica) {
            first_error_replica = r;
            first_error = std::current_exception();
          }
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
  return results;
}

}  // namespace bflow
