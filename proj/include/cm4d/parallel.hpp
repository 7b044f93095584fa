#pragma once

#include <cstddef>
#include <functional>

namespace cm4d {

/// Worker count from the CM4D_WORKERS environment variable, falling back to
/// the hardware concurrency (at least 1).
std::size_t default_workers();

/// Runs fn(i) for every i in [0, count) on up to `workers` threads. Tasks are
/// handed out dynamically; callers that need deterministic results write into
/// per-task slots and reduce afterwards in index order. The first exception
/// thrown by a task is rethrown on the calling thread.
void parallel_for(std::size_t count, std::size_t workers,
                  const std::function<void(std::size_t)>& fn);

} // namespace cm4d
