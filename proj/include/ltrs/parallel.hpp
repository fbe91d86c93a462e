#pragma once

#include <cstddef>
#include <functional>

namespace ltrs {

/// Number of workers used when a caller passes threads <= 0.
int default_threads();

/// Runs body(i) for i in [0, n) on up to `threads` workers. Each index is
/// handled exactly once; callers write into preallocated slots so the result
/// does not depend on scheduling. The first exception is rethrown.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body);

}  // namespace ltrs
