#pragma once

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace coherit {

// Runs work(i) for i in [0, count) across a pool of workers. Callers write
// results into index-addressed storage, so the outcome is identical for any
// worker count or schedule. The first exception wins and is rethrown after
// all workers join.
template <typename Fn>
void run_indexed(int count, int threads, Fn&& work) {
  if (threads <= 1 || count <= 1) {
    for (int i = 0; i < count; ++i) work(i);
    return;
  }
  std::atomic<int> next{0};
  std::atomic<bool> errored{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto runner = [&]() {
    while (!errored.load(std::memory_order_relaxed)) {
      const int i = next.fetch_add(1);
      if (i >= count) break;
      try {
        work(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!errored.exchange(true)) error = std::current_exception();
        break;
      }
    }
  };
  const int pool = std::min(threads, count);
  std::vector<std::thread> workers;
  workers.reserve(pool);
  for (int t = 0; t < pool; ++t) workers.emplace_back(runner);
  for (auto& w : workers) w.join();
  if (errored.load()) std::rethrow_exception(error);
}

}  // namespace coherit
