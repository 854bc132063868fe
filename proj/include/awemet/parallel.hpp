// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>

namespace awemet {

// Worker count resolution order: explicit set_num_workers() value,
// AWEMET_WORKERS environment variable, then 1.
int num_workers();
void set_num_workers(int n);  // n <= 0 restores env/default resolution

// Runs fn(i) for i in [0, n). Work is split into fixed contiguous chunks that
// do not depend on the worker count, and every unit writes only to its own
// slots, so results are identical for any number of workers.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

// Chunked variant: fn(chunk_index, begin, end) over fixed chunk boundaries
// (ceil(n / num_chunks) wide). Used where per-chunk accumulators are reduced
// in chunk order afterwards.
void parallel_chunks(std::size_t n, std::size_t num_chunks,
                     const std::function<void(std::size_t, std::size_t,
                                              std::size_t)>& fn);

}  // namespace awemet
