#pragma once

#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace schro {

// Worker cap: min(hardware, SCHRO_LDP_THREADS). Thread count affects speed
// only; all chunked work is deterministic in (seed, chunk size).
inline int max_workers() {
  int n = static_cast<int>(std::thread::hardware_concurrency());
  if (n < 1) n = 1;
  if (const char* env = std::getenv("SCHRO_LDP_THREADS")) {
    const int cap = std::atoi(env);
    if (cap >= 1 && cap < n) n = cap;
  }
  return n;
}

// Runs fn(chunk_index, begin, end) over [0, n) split into fixed-size chunks.
// Chunk boundaries depend only on (n, chunk_size), so callers that derive an
// RNG substream per chunk index get identical results for any worker count.
inline void parallel_chunks(std::int64_t n, std::int64_t chunk_size,
                            const std::function<void(std::int64_t, std::int64_t, std::int64_t)>& fn) {
  if (n <= 0) return;
  if (chunk_size < 1) chunk_size = 1;
  const std::int64_t n_chunks = (n + chunk_size - 1) / chunk_size;
  const int workers = static_cast<int>(std::min<std::int64_t>(max_workers(), n_chunks));

  if (workers <= 1) {
    for (std::int64_t c = 0; c < n_chunks; ++c)
      fn(c, c * chunk_size, std::min(n, (c + 1) * chunk_size));
    return;
  }

  std::atomic<std::int64_t> next{0};
  std::exception_ptr first_error;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      while (!failed.load(std::memory_order_relaxed)) {
        const std::int64_t c = next.fetch_add(1);
        if (c >= n_chunks) break;
        try {
          fn(c, c * chunk_size, std::min(n, (c + 1) * chunk_size));
        } catch (...) {
          if (!failed.exchange(true)) first_error = std::current_exception();
          break;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace schro
