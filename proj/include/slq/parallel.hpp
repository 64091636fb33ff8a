#pragma once

#include <cstddef>
#include <functional>

namespace slq {

/// Caps worker threads used by parallel_for; 0 restores the default (all
/// available cores).
void set_thread_limit(int threads);
int thread_limit();

/// Splits [0, count) into contiguous chunks, one per worker, and runs
/// body(begin, end) on each. Results must not depend on the split: callers
/// write per-index outputs and reduce afterwards in index order. An exception
/// thrown by a chunk is rethrown after all chunks finish (lowest chunk wins).
void parallel_for(std::size_t count, const std::function<void(std::size_t begin, std::size_t end)>& body);

}  // namespace slq
