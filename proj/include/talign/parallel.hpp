#pragma once

#include <cstddef>
#include <functional>

namespace talign {

// Worker count from TA_THREADS, else hardware concurrency (at least 1).
int worker_count();

/// Runs body(i) for i in [0, count) on up to `workers` threads. Each index is
/// executed exactly once; callers write results into per-index slots so the
/// outcome does not depend on scheduling. The first exception is rethrown.
void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& body);

}  // namespace talign
