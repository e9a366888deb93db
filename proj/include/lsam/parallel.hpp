#pragma once

#include <cstddef>
#include <functional>

namespace lsam {

// 0 means "use hardware concurrency".
unsigned resolve_threads(unsigned requested);

// Runs fn(i) for i in [0, count) on `threads` workers pulling from a shared
// counter. Results must be written to index-addressed slots so the outcome
// is independent of scheduling. The first exception thrown by any item is
// rethrown after all workers join.
void parallel_for(std::size_t count, unsigned threads,
                  const std::function<void(std::size_t)>& fn);

}  // namespace lsam
