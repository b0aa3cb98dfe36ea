#pragma once

#include <cstddef>
#include <functional>

namespace gvs {

/// Worker count: STHLM_THREADS when set to a positive integer, otherwise the
/// hardware concurrency (at least 1).
std::size_t thread_count();

/// Runs fn(i) for i in [0, n). Indices are handed out in contiguous blocks,
/// so results written to slot i are identical for any thread count.
/// The first exception thrown by a worker is rethrown on the caller.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace gvs
