#pragma once

#include <cstddef>
#include <functional>

namespace schro {

/// Worker count: SCHRO_CHAOS_THREADS if set to a positive integer, else
/// hardware concurrency (at least 1).
std::size_t worker_count();

/// Calls fn(i) for i in [0, n) on up to `threads` workers (0 means
/// worker_count()). Work is handed out by index, so callers that write
/// results into slot i get the same output for any thread count. The first
/// exception thrown by fn is rethrown after all workers stop.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                  std::size_t threads = 0);

}  // namespace schro
