#pragma once

#include <cstddef>
#include <functional>

namespace optospring {

/// Worker cap for embarrassingly parallel loops: OPTOSPRING_WORKERS if set
/// (clamped to at least 1), otherwise the hardware thread count.
unsigned worker_count();

/// Run fn(i) for i in [0, n) on up to worker_count() threads. Work items
/// must be independent; any exception is rethrown on the calling thread
/// after all workers join. Serial when n <= 1 or one worker.
void parallel_for_index(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace optospring
