#pragma once

#include <cstddef>
#include <functional>

namespace texsr {

/// Number of worker threads used by parallel loops (process-wide, default 1).
void set_thread_count(int count);
int thread_count();

/// Runs body(i) for every i in [begin, end). Iterations are split into
/// contiguous blocks, one per worker. The body must only write state owned by
/// iteration i; under that rule results do not depend on the thread count.
void parallel_for(std::size_t begin, std::size_t end, const std::function<void(std::size_t)>& body);

} // namespace texsr
