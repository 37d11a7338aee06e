#pragma once

#include <cstddef>
#include <functional>

namespace h2p {

/// Worker count: hardware concurrency, capped by the H2P_THREADS environment
/// variable when it holds a positive integer.
unsigned worker_count();

/// Runs body(i) for i in [0, count) on up to worker_count() threads. Each
/// index is handled exactly once; the first exception thrown is rethrown.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace h2p
