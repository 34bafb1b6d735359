#pragma once

#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace charax {

/// Upper bound on worker threads used by solver internals (default 1).
void set_workers(int n);
int workers();

/// Runs body(i) for i in [0, n). Work items are dealt round-robin to the
/// workers; each item must write only its own outputs, so results do not
/// depend on the worker count. The first exception thrown is rethrown.
template <class Body>
void parallel_for(std::size_t n, Body&& body) {
  const auto w = static_cast<std::size_t>(workers());
  if (w <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  const std::size_t nt = w < n ? w : n;
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(nt);
  for (std::size_t t = 0; t < nt; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < n; i += nt) body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace charax
