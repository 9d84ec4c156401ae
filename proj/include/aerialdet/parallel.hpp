#pragma once

#include <atomic>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace aerialdet {

// Worker budget: AERIALDET_THREADS caps it, otherwise hardware concurrency.
inline int thread_budget() {
  static const int budget = [] {
    int hw = static_cast<int>(std::thread::hardware_concurrency());
    if (hw < 1) hw = 1;
    if (const char* env = std::getenv("AERIALDET_THREADS")) {
      int cap = std::atoi(env);
      if (cap >= 1 && cap < hw) return cap;
      if (cap >= 1) return cap;
    }
    return hw;
  }();
  return budget;
}

// Runs fn(chunk_index, begin, end) over fixed-size chunks of [0, count).
// Chunk boundaries depend only on (count, chunk_size), never on the thread
// count, so callers that reduce per-chunk results in chunk order get
// identical output for any worker budget.
inline void parallel_chunks(std::size_t count, std::size_t chunk_size,
                            const std::function<void(std::size_t, std::size_t, std::size_t)>& fn) {
  if (count == 0) return;
  if (chunk_size == 0) chunk_size = 1;
  const std::size_t n_chunks = (count + chunk_size - 1) / chunk_size;
  const int workers = std::min<std::size_t>(thread_budget(), n_chunks);
  if (workers <= 1) {
    for (std::size_t c = 0; c < n_chunks; ++c) {
      fn(c, c * chunk_size, std::min(count, (c + 1) * chunk_size));
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t c = next.fetch_add(1);
      if (c >= n_chunks) return;
      fn(c, c * chunk_size, std::min(count, (c + 1) * chunk_size));
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers) - 1);
  for (int i = 1; i < workers; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
}

}  // namespace aerialdet
