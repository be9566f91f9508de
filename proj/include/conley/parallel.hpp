#pragma once

#include <algorithm>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace conley {

/// Worker cap shared by all data-parallel sweeps. Results must never depend
/// on it: every parallel_for body writes only to its own index slot.
inline int& worker_cap() {
  static int cap = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  return cap;
}

inline void set_worker_cap(int n) { worker_cap() = std::max(1, n); }

template <class F>
void parallel_for(std::size_t n, F&& body) {
  const std::size_t k =
      std::min<std::size_t>(static_cast<std::size_t>(worker_cap()), std::max<std::size_t>(n, 1));
  if (k <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::exception_ptr err;
  std::mutex err_mu;
  pool.reserve(k);
  for (std::size_t t = 0; t < k; ++t) {
    const std::size_t begin = n * t / k;
    const std::size_t end = n * (t + 1) / k;
    pool.emplace_back([&, begin, end] {
      try {
        for (std::size_t i = begin; i < end; ++i) body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lk(err_mu);
        if (!err) err = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace conley
