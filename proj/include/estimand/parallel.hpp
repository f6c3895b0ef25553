#pragma once

#include <cstddef>
#include <functional>

namespace estimand {

/// Worker cap: ESTIMAND_LAB_THREADS if set to a positive integer, otherwise
/// the hardware concurrency (at least 1).
std::size_t worker_count();

/// Runs body(begin, end) over a partition of [0, n) into contiguous chunks.
/// Chunks are disjoint, so bodies writing only to their own index range need
/// no synchronisation. Results must not depend on the partition.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body,
                  std::size_t min_chunk = 64);

}  // namespace estimand
