#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <optional>
#include <thread>
#include <type_traits>
#include <vector>

namespace mplab {

inline int default_workers() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

/// Evaluates fn(0..count-1) on a pool of workers. Results come back in index
/// order, so any fold over them is independent of the worker count. If tasks
/// throw, the exception of the lowest failing index is rethrown.
template <class F>
auto parallel_map(std::size_t count, int workers, F&& fn) {
  using T = std::invoke_result_t<F&, std::size_t>;
  std::vector<std::optional<T>> slots(count);
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};

  auto drain = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        slots[i].emplace(fn(i));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };

  const auto threads = static_cast<std::size_t>(std::max(1, workers));
  if (threads == 1 || count <= 1) {
    drain();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(std::min(threads, count));
    for (std::size_t t = 0; t < std::min(threads, count); ++t) pool.emplace_back(drain);
  }

  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  std::vector<T> out;
  out.reserve(count);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

}  // namespace mplab
