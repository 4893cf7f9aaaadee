#pragma once

#include <cstdint>
#include <functional>

namespace dlab {

/// Worker count used by parallel_for. Defaults to DLAB_THREADS when set,
/// otherwise hardware concurrency.
int num_threads();
void set_num_threads(int n);

/// Runs fn(i) for i in [0, n). Chunking is static and results must be
/// written to per-index storage; reductions happen after the join, so
/// output is identical for every thread count. The first exception thrown
/// by any worker is rethrown on the calling thread.
void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& fn);

}  // namespace dlab
