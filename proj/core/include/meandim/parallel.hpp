#pragma once

#include <cstddef>
#include <functional>

namespace meandim {

/// Worker count used when a caller passes 0: MEANDIM_THREADS if set and
/// positive, otherwise std::thread::hardware_concurrency() (at least 1).
std::size_t default_thread_count();

std::size_t resolve_threads(std::size_t requested);

/// Run body(chunk) for chunk in [0, n_chunks) on up to `threads` workers.
///
/// Chunks are claimed dynamically, so callers must write results into
/// per-chunk slots and reduce them in chunk order afterwards; that keeps
/// results independent of the worker count. The first exception thrown by a
/// body is rethrown on the calling thread after all workers stop.
void parallel_for_chunks(std::size_t n_chunks, std::size_t threads,
                         const std::function<void(std::size_t)>& body);

/// Fixed block size used to partition row-wise work. It never depends on the
/// worker count.
inline constexpr std::size_t kRowBlock = 256;

inline std::size_t block_count(std::size_t n, std::size_t block = kRowBlock) {
  return (n + block - 1) / block;
}

}  // namespace meandim
