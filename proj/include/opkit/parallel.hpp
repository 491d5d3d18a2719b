#pragma once

#include <cstddef>
#include <functional>

namespace opkit {

// Worker cap: GAMMA_OPKIT_THREADS if set and positive, else hardware concurrency.
unsigned thread_cap();

// Runs body(i) for i in [0, count); results must be written to per-index slots so
// that reductions stay independent of scheduling.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace opkit
