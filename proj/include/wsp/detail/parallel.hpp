#pragma once

#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

namespace wsp::detail {

/// Run `worker(i)` for i in [0, count) and return the first hit, where a hit
/// is a worker call returning a value. With threads <= 1 the scan is
/// sequential in index order (reproducible); otherwise the index space is
/// split into contiguous chunks, one per thread, and any thread's hit wins.
/// Worker exceptions are re-thrown on the calling thread.
template <typename T, typename Worker>
std::optional<T> first_hit(std::uint64_t count, int threads,
                           const Worker& worker) {
  if (threads <= 1 || count < 2) {
    for (std::uint64_t i = 0; i < count; ++i) {
      if (auto hit = worker(i)) return hit;
    }
    return std::nullopt;
  }

  const std::uint64_t workers =
      std::min<std::uint64_t>(static_cast<std::uint64_t>(threads), count);
  std::atomic<bool> stop{false};
  std::mutex result_mutex;
  std::optional<T> result;
  std::exception_ptr error;

  auto run_chunk = [&](std::uint64_t begin, std::uint64_t end) {
    try {
      for (std::uint64_t i = begin; i < end && !stop.load(std::memory_order_relaxed);
           ++i) {
        if (auto hit = worker(i)) {
          std::lock_guard lock(result_mutex);
          if (!result) result = std::move(hit);
          stop.store(true, std::memory_order_relaxed);
          return;
        }
      }
    } catch (...) {
      std::lock_guard lock(result_mutex);
      if (!error) error = std::current_exception();
      stop.store(true, std::memory_order_relaxed);
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::uint64_t chunk = (count + workers - 1) / workers;
  for (std::uint64_t w = 0; w < workers; ++w) {
    const std::uint64_t begin = w * chunk;
    const std::uint64_t end = std::min(count, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back(run_chunk, begin, end);
  }
  for (auto& t : pool) t.join();

  if (error) std::rethrow_exception(error);
  return result;
}

}  // namespace wsp::detail
