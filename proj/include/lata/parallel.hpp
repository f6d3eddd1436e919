#pragma once

#include <cstddef>
#include <functional>

namespace lata {

/// Worker count: hardware concurrency capped by LATA_THREADS (if set, >= 1).
std::size_t thread_budget() noexcept;

/// Runs body(i) for i in [0, count) over contiguous chunks. Each index is
/// visited exactly once; callers write results by index so output order never
/// depends on scheduling. Exceptions from workers are rethrown on the caller.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace lata
