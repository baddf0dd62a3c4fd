#pragma once

#include <cstddef>
#include <functional>

namespace rotorspin {

// Worker count: hardware concurrency, capped by ROTORSPIN_THREADS when set.
unsigned worker_count();

// Calls body(i) for i in [0, n). Each index is visited exactly once; bodies
// must only write to storage owned by their index.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace rotorspin
