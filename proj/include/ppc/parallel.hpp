#pragma once

// Shared-nothing fan-out over independent work items. Each item writes only
// its own result slot, so the output is identical whatever the thread count
// or schedule; determinism comes from the items' counter-based seeds, not
// from ordering.

#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace ppc {

inline unsigned default_workers() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

// fn(i) computes item i; results land in slot i. workers == 0 means one per
// hardware thread. The first exception thrown by any item is rethrown.
template <typename Result, typename Fn>
std::vector<Result> parallel_map(std::size_t count, Fn&& fn, unsigned workers = 0) {
  std::vector<Result> results(count);
  if (count == 0) return results;
  if (workers == 0) workers = default_workers();
  if (workers > count) workers = static_cast<unsigned>(count);

  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) results[i] = fn(i);
    return results;
  }

  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;

  auto worker = [&]() {
    while (!failed.load(std::memory_order_relaxed)) {
      const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= count) return;
      try {
        results[i] = fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        failed.store(true, std::memory_order_relaxed);
        return;
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
  return results;
}

}  // namespace ppc
