#pragma once

#include <cstddef>
#include <functional>

namespace wassercalc {

// Number of worker threads: WASSERCALC_THREADS caps parallelism, 0 or unset
// means hardware concurrency.
unsigned thread_count();

// Runs fn(i) for i in [0, n). Results must be written to per-index slots so
// the reduction order (ascending i) is deterministic regardless of threads.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace wassercalc
