#pragma once

#include <cstddef>
#include <functional>

namespace invlab {

/// Worker count: RKHS_INVLAB_THREADS when set to a positive integer, otherwise the
/// hardware concurrency (at least 1).
unsigned worker_count();

/// Calls body(i) for i in [0, count) on up to worker_count() threads. The first
/// exception thrown by any body is rethrown after all workers stop. Results must be
/// written to per-index slots; the call order is unspecified.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace invlab
