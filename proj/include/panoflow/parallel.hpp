#pragma once

#include <algorithm>
#include <functional>
#include <thread>
#include <vector>

namespace panoflow {

/// Process-wide worker cap for row-parallel loops. 0 = hardware concurrency.
void set_max_threads(int n);
int max_threads();

/// Runs fn(i) for i in [begin, end) on contiguous index chunks. Each index is
/// handled by exactly one worker, so results must not depend on schedule.
void parallel_for(int begin, int end, const std::function<void(int)>& fn);

}  // namespace panoflow
