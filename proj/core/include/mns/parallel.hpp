#pragma once

#include <cstddef>
#include <functional>

namespace mns {

/// Runs body(i) for i in [0, count) on up to `threads` workers (0 = hardware
/// concurrency). Indices are handed out dynamically; callers write results
/// by index so output never depends on the schedule. The first exception
/// thrown by any body is rethrown after all workers stop.
void parallel_for(std::size_t count, unsigned threads,
                  const std::function<void(std::size_t)>& body);

unsigned resolve_threads(unsigned requested);

}  // namespace mns
