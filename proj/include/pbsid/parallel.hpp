#pragma once

#include <cstddef>
#include <functional>

namespace pbsid {

/// Worker count: PBSID_THREADS if set and positive, else hardware concurrency.
[[nodiscard]] unsigned worker_count();

/// Runs body(i) for i in [0, count) on up to `threads` workers (0 = worker_count()).
/// Each index is visited exactly once; the first exception is rethrown.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body,
                  unsigned threads = 0);

}  // namespace pbsid
