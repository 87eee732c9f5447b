#pragma once

#include <cstddef>
#include <functional>

namespace nullot {

// Worker count used by parallel_for. 0 restores the default
// (NULLOT_THREADS, else hardware concurrency).
void set_thread_count(int k);
int thread_count();

// Runs body(i) for i in [0, count). Each index is handled exactly once and
// results must be written to per-index slots, so output never depends on
// scheduling. The exception of the lowest failing index is rethrown.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace nullot
