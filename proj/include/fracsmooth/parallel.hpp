#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace fracsmooth {

namespace detail {
inline std::atomic<unsigned>& thread_setting() {
  static std::atomic<unsigned> value{0};
  return value;
}
}  // namespace detail

/// Caps the number of workers used by path loops. 0 restores the hardware default.
inline void set_thread_count(unsigned threads) { detail::thread_setting() = threads; }

inline unsigned thread_count() {
  unsigned t = detail::thread_setting();
  if (t == 0) t = std::max(1u, std::thread::hardware_concurrency());
  return t;
}

/// Runs body(begin, end) over contiguous chunks of [0, count). Chunk boundaries
/// depend on the worker count, so bodies must write only to per-index slots.
template <class Body>
void parallel_for(std::size_t count, Body&& body) {
  const std::size_t workers = std::min<std::size_t>(thread_count(), count);
  if (workers <= 1) {
    if (count > 0) body(std::size_t{0}, count);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = count * w / workers;
    const std::size_t end = count * (w + 1) / workers;
    pool.emplace_back([&, w, begin, end] {
      try {
        body(begin, end);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  pool.clear();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace fracsmooth
