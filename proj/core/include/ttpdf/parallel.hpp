#pragma once

#include <cstddef>
#include <functional>

namespace ttpdf {

/// Worker cap: TTPDF_THREADS if set and positive, else hardware concurrency.
std::size_t worker_count();

/// Calls body(begin, end) on disjoint contiguous chunks covering [0, count).
/// Runs serially when nested inside another parallel_for or when one worker is
/// available. The first exception thrown by any chunk is rethrown.
void parallel_for(std::size_t count, const std::function<void(std::size_t, std::size_t)>& body,
                  std::size_t min_chunk = 1);

}  // namespace ttpdf
