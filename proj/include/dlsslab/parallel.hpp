#pragma once

#include <cstddef>
#include <functional>

namespace dlss {

/// Worker count: hardware concurrency, capped by DLSSLAB_THREADS when set.
int worker_count();

/// Runs fn(i) for i in [0, n) on up to worker_count() threads. The first
/// exception thrown by any task is rethrown after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace dlss
