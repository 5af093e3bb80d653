#pragma once

#include <cstddef>
#include <thread>
#include <vector>

namespace kgtrim {

// Runs fn(begin, end) over disjoint chunks of [0, n). With threads <= 1 the
// call degenerates to fn(0, n) on the calling thread. Results must not depend
// on chunking: callers only write to per-index slots.
template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
    if (threads <= 1 || n < 2) {
        fn(std::size_t{0}, n);
        return;
    }
    const unsigned workers = std::min<std::size_t>(threads, n);
    const std::size_t chunk = (n + workers - 1) / workers;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned t = 0; t < workers; ++t) {
        const std::size_t lo = t * chunk;
        const std::size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&fn, lo, hi] { fn(lo, hi); });
    }
    for (auto& th : pool) th.join();
}

}  // namespace kgtrim
