#pragma once

#include <cstddef>
#include <functional>

namespace antilimit {

// Resolves a requested worker count: n <= 0 means hardware concurrency.
int resolve_workers(int requested);

// Runs fn(i) for i in [0, n) on up to `workers` threads. Each index is
// handled exactly once; callers write results into per-index slots so the
// outcome never depends on scheduling. If any call throws, the exception of
// the smallest failing index is rethrown after all threads finish.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

}  // namespace antilimit
