#pragma once

#include <cstdint>
#include <functional>

namespace camid {

// Runs fn(i) for i in [0, n) on up to `threads` workers (0 = hardware
// concurrency). Work is split into contiguous static blocks, so any
// exception maps back to a deterministic index range. Callers must write
// results into per-index slots: outputs are then identical for every
// thread count.
void parallel_for(std::int64_t n, int threads, const std::function<void(std::int64_t)>& fn);

int default_thread_count();

}  // namespace camid
