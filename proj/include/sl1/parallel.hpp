#pragma once

#include <cstddef>
#include <functional>

namespace sl1 {

// Calls fn(i) for every i in [0, count) on up to `threads` workers. Work is
// handed out by index; callers write results into per-index slots so the
// outcome does not depend on scheduling. The first exception thrown by any
// fn is rethrown after all workers finish.
void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& fn);

// SL1_THREADS from the environment, else 1.
std::size_t default_threads();

}  // namespace sl1
