#pragma once
// Deterministic index-parallel map: workers pull indices from a shared
// counter; results must be written to per-index slots so aggregation order
// never depends on scheduling. With jobs <= 1 the loop runs inline.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace homlat {

template <class F>
void parallel_for(std::int64_t count, int jobs, F&& body) {
  if (count <= 0) return;
  if (jobs <= 1 || count == 1) {
    for (std::int64_t i = 0; i < count; ++i) body(i);
    return;
  }
  const int workers = static_cast<int>(std::min<std::int64_t>(jobs, count));
  std::atomic<std::int64_t> next{0};
  std::mutex err_mu;
  std::exception_ptr first_error;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      while (true) {
        const std::int64_t i = next.fetch_add(1);
        if (i >= count) return;
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mu);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace homlat
