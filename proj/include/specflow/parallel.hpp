#pragma once

#include <functional>

namespace specflow {

// Gradient and loss reductions always run over this many fixed chunks and
// are combined in chunk order, so results never depend on the thread count.
inline constexpr int kReduceChunks = 16;

// requested > 0 wins, else env SPECFLOW_THREADS, else 1.
int resolve_threads(int requested);

// Calls fn(chunk, begin, end) for `chunks` contiguous slices of [0, n).
// Slice boundaries depend only on (n, chunks); threads only change which
// worker executes a chunk, never what the chunk computes.
void run_chunked(int n, int chunks, int threads,
                 const std::function<void(int, int, int)>& fn);

}  // namespace specflow
