#pragma once

#include <cstddef>
#include <functional>

namespace fct {

// Worker cap from FCT_THREADS; falls back to `fallback` when unset or invalid.
std::size_t configured_threads(std::size_t fallback);
std::size_t hardware_threads();

// Runs fn(i) for i in [0, n) on up to `workers` threads. Each index runs
// exactly once; callers write results to per-index slots so the outcome
// does not depend on scheduling. The first exception is rethrown.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn);

}  // namespace fct
