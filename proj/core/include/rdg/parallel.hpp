#pragma once

#include <cstddef>
#include <functional>

namespace rdg {

/// Worker count from the RDG_WORKERS environment variable, else the hardware
/// concurrency (at least 1).
std::size_t worker_count();

/// Calls fn(k) for k in [0, n) on up to `workers` threads. Indices are handed
/// out dynamically; the first exception thrown by fn is rethrown after all
/// threads have joined.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn);

}  // namespace rdg
