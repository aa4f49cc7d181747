#pragma once

#include <functional>

namespace scl {

// Number of worker threads (env SCL_THREADS overrides hardware concurrency).
int worker_count();

// Runs fn(shard) for shard in [0, n_shards) on the worker pool and waits.
// Shard decomposition is fixed by the caller, so results are independent of
// the thread count as long as each shard writes only its own outputs.
void parallel_shards(int n_shards, const std::function<void(int)>& fn);

}  // namespace scl
