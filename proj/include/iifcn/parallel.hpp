#pragma once

#include <cstdint>
#include <functional>

namespace iifcn {

// Worker count: min(hardware threads, IIFCN_THREADS when set). At least 1.
int worker_count();

// Runs fn(begin, end) over a fixed contiguous partition of [0, n).
// Each index is processed by exactly one worker, so results are bitwise
// deterministic for any worker count as long as writes are disjoint.
void parallel_for(int64_t n, const std::function<void(int64_t, int64_t)>& fn);

} // namespace iifcn
