#pragma once

#include <cstddef>
#include <functional>

namespace bioexp {

// Worker count: BIOEXP_THREADS if set (clamped to [1, hardware]), otherwise
// the hardware concurrency.
unsigned thread_count();

// Runs fn(i) for i in [0, n). Work items must be independent; callers keep
// determinism by writing results through the index. Serial when n is small
// or one worker is configured.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace bioexp
