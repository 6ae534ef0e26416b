#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace safelens {

/// Runs fn(i) for i in [0, count) over up to `threads` workers (0 = hardware
/// concurrency). Indices are split into contiguous blocks; the first exception
/// thrown by any worker is rethrown after all workers join.
template <typename Fn>
void parallel_for(std::size_t count, Fn&& fn, std::size_t threads = 0) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, count);
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(threads);
  {
    std::vector<std::jthread> workers;
    workers.reserve(threads);
    const std::size_t block = (count + threads - 1) / threads;
    for (std::size_t w = 0; w < threads; ++w) {
      const std::size_t begin = w * block;
      const std::size_t end = std::min(count, begin + block);
      workers.emplace_back([&, w, begin, end] {
        try {
          for (std::size_t i = begin; i < end; ++i) fn(i);
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

}  // namespace safelens
