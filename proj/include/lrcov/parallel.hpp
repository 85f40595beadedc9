#pragma once

#include <cstddef>
#include <functional>

namespace lrcov {

/// Worker count for `requested` (<= 0 means hardware concurrency), capped by
/// the LRCOV_THREADS environment variable when it holds a positive integer.
int resolve_thread_count(int requested);

/// Runs body(i) for i in [0, count) on up to `threads` workers. If any call
/// throws, the exception of the lowest failing index is rethrown after all
/// workers finish.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body);

}  // namespace lrcov
