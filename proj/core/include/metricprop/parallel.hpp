#pragma once

#include <cstdint>
#include <functional>

namespace mprop {

// Worker-thread cap for all parallel loops (CLI --threads). 0 means
// hardware_concurrency. The cap changes scheduling only, never results:
// every parallel loop partitions work into disjoint item ranges whose
// outputs land in per-item slots, and reductions are performed sequentially
// afterwards, so floating-point results are independent of the thread count.
void set_max_threads(int n);
int max_threads();

// Runs fn(begin..end) over disjoint contiguous ranges on up to max_threads()
// threads and joins. fn must not touch shared mutable state outside its range.
// Exceptions from workers are rethrown on the calling thread.
void parallel_for(std::int64_t n, const std::function<void(std::int64_t, std::int64_t)>& fn);

}  // namespace mprop
