#pragma once

#include <cstddef>
#include <functional>

namespace fbdsde {

/// Caps the number of worker threads used by ParallelFor (>= 1). Results of
/// every library routine are independent of this setting.
void SetWorkerCount(int workers);
int WorkerCount();

/// Runs body(i) for i in [0, count), split into contiguous blocks across
/// workers. Each index must write only to its own output slots.
void ParallelFor(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace fbdsde
