#include "specflow/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

#include "specflow/errors.hpp"

namespace specflow {

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("SPECFLOW_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    require(end != env && *end == '\0' && v > 0 && v <= 1024,
            ErrClass::BadConfig,
            "SPECFLOW_THREADS must be a positive integer");
    return int(v);
  }
  return 1;
}

void run_chunked(int n, int chunks, int threads,
                 const std::function<void(int, int, int)>& fn) {
  if (n <= 0 || chunks <= 0) return;
  auto bounds = [&](int c) {
    // ceil-balanced split: first (n % chunks) slices get one extra item
    int base = n / chunks, rem = n % chunks;
    int begin = c * base + (c < rem ? c : rem);
    int len = base + (c < rem ? 1 : 0);
    return std::pair<int, int>{begin, begin + len};
  };
  if (threads <= 1 || chunks == 1) {
    for (int c = 0; c < chunks; ++c) {
      auto [b, e] = bounds(c);
      if (b < e) fn(c, b, e);
    }
    return;
  }
  std::atomic<int> next{0};
  int workers = threads < chunks ? threads : chunks;
  std::vector<std::thread> pool;
  pool.reserve(size_t(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int c = next.fetch_add(1); c < chunks; c = next.fetch_add(1)) {
        auto [b, e] = bounds(c);
        if (b < e) fn(c, b, e);
      }
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace specflow
