#pragma once

#include <cstddef>
#include <functional>

namespace rinst {

/// Worker count: `requested` (0 = hardware concurrency), capped by the
/// RINST_THREADS environment variable when set, never below 1.
std::size_t thread_budget(std::size_t requested = 0);

/// Run fn(i) for i in [0, n) on up to `threads` workers pulling indices from a
/// shared counter. Exceptions escaping fn are rethrown after all workers join.
void parallel_for(std::size_t n, std::size_t threads,
                  const std::function<void(std::size_t)>& fn);

}  // namespace rinst
