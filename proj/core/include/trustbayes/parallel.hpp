#pragma once

#include <cstddef>
#include <functional>

namespace trustbayes {

// Worker cap for all internal parallel loops. 0 restores the default, which
// reads TRUSTBAYES_THREADS and falls back to the hardware concurrency.
void set_max_threads(std::size_t threads);
std::size_t max_threads();

// Runs body(i) for i in [0, count) over contiguous static chunks. Callers
// write results into per-index slots and reduce afterwards in index order,
// which keeps every result independent of the worker count. The exception
// from the lowest failing index is rethrown on the calling thread.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace trustbayes
