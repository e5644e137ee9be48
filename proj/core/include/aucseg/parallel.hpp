#pragma once

#include <cstddef>
#include <functional>

namespace aucseg {

/// Worker count for internal parallel loops: the AUCSEG_THREADS environment
/// variable if set to a positive integer, otherwise the hardware concurrency.
/// Results never depend on this value.
int thread_count();

/// Overrides AUCSEG_THREADS for the current process; 0 restores the default.
void set_thread_count(int threads);

/// Runs fn(i) for i in [0, n). Iterations are split into contiguous chunks;
/// fn must only write state owned by its own index.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace aucseg
