#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace sentops::detail {

inline std::size_t resolve_threads(std::size_t requested, std::size_t work) {
  std::size_t n = requested ? requested : std::max<std::size_t>(1, std::thread::hardware_concurrency());
  return std::max<std::size_t>(1, std::min(n, work));
}

/// Calls fn(i) for every i in [0, count) using up to `threads` workers
/// (0 = hardware concurrency). Each index runs exactly once, so callers that
/// write only to slot i get results identical to a sequential loop.
template <class Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn&& fn) {
  const std::size_t workers = resolve_threads(threads, count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < count; i += workers) fn(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace sentops::detail
