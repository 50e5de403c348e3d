#pragma once

#include <cstddef>
#include <functional>

namespace rgcinit {

/// Worker count from the RGC_THREADS environment variable (default 1).
std::size_t configured_threads();

/// Runs fn(chunk) for every chunk in [0, num_chunks) on up to `threads`
/// workers. Callers reduce per-chunk partial results in chunk order, so the
/// outcome does not depend on the worker count.
void for_each_chunk(std::size_t num_chunks, std::size_t threads,
                    const std::function<void(std::size_t)>& fn);

}  // namespace rgcinit
