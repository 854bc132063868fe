// SPDX-License-Identifier: Apache-2.0
#include "awemet/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace awemet {

namespace {
std::atomic<int> g_workers{0};

int env_workers() {
  if (const char* s = std::getenv("AWEMET_WORKERS")) {
    const int n = std::atoi(s);
    if (n > 0) return n;
  }
  return 1;
}
}  // namespace

int num_workers() {
  const int n = g_workers.load(std::memory_order_relaxed);
  return n > 0 ? n : env_workers();
}

void set_num_workers(int n) {
  g_workers.store(n, std::memory_order_relaxed);
}

void parallel_chunks(std::size_t n, std::size_t num_chunks,
                     const std::function<void(std::size_t, std::size_t,
                                              std::size_t)>& fn) {
  if (n == 0) return;
  num_chunks = std::min(std::max<std::size_t>(num_chunks, 1), n);
  const std::size_t chunk = (n + num_chunks - 1) / num_chunks;

  const int workers = std::min<int>(num_workers(),
                                    static_cast<int>(num_chunks));
  std::exception_ptr error;
  std::mutex error_mu;
  std::atomic<std::size_t> next{0};

  auto run = [&]() {
    for (;;) {
      const std::size_t c = next.fetch_add(1);
      if (c >= num_chunks) return;
      const std::size_t begin = c * chunk;
      const std::size_t end = std::min(begin + chunk, n);
      if (begin >= end) continue;
      try {
        fn(c, begin, end);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };

  if (workers <= 1) {
    run();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers) - 1);
    for (int w = 1; w < workers; ++w) pool.emplace_back(run);
    run();
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  // Chunk granularity is fixed relative to n so the schedule (and therefore
  // every intermediate value) is independent of the worker count.
  const std::size_t num_chunks = std::min<std::size_t>(n, 64);
  parallel_chunks(n, num_chunks,
                  [&](std::size_t, std::size_t begin, std::size_t end) {
                    for (std::size_t i = begin; i < end; ++i) fn(i);
                  });
}

}  // namespace awemet
