#pragma once

#include <cstddef>
#include <functional>

namespace leaper {

// Worker cap for internal parallel loops. 0 restores the default
// (LEAPER_THREADS if set, else hardware concurrency).
void set_thread_count(unsigned n);
unsigned thread_count();

// Runs body(i) for i in [0, n). Each index must write only its own slot;
// results are then independent of the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace leaper
