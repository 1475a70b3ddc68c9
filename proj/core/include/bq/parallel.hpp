#pragma once

#include <cstddef>
#include <functional>

namespace bq {

/// Worker count for internal loops: BQ_THREADS if set and > 0, otherwise the
/// hardware concurrency.
std::size_t thread_count();

/// Runs body(i) for i in [0, n), split into contiguous chunks across threads.
/// Each index is handled by exactly one thread, so per-element results do not
/// depend on the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace bq
