#pragma once

#include <cstddef>
#include <functional>

namespace fracac {

// Worker count used by parallel maps; 0 selects std::thread::hardware_concurrency().
void set_thread_count(unsigned n);
unsigned thread_count();

// Splits [0, n) into contiguous static chunks, one per worker. Chunk boundaries depend only on
// n and the worker count, and every index is written by exactly one worker.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace fracac
