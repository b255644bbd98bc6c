#pragma once

#include <cstddef>
#include <functional>

namespace ptqm {

/// Worker count: hardware concurrency, capped by PTQM_THREADS when set.
unsigned worker_count();

/// Runs body(i) for i in [0, n). Each index is handled exactly once; results
/// must be written to per-index slots so output does not depend on scheduling.
/// The first exception thrown by any body is rethrown after all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace ptqm
