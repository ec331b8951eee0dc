#pragma once

#include <algorithm>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace flex::detail {

/// Thread budget: FLEXMAP_THREADS when set, hardware concurrency otherwise.
inline int thread_budget(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("FLEXMAP_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

/// Static block partition of [0, n); results must be written by index so the
/// merge is independent of scheduling.
template <typename Fn>
void parallel_for(int n, int threads, Fn&& body) {
    threads = std::max(1, std::min(threads, n));
    if (threads == 1) {
        for (int i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    const int chunk = (n + threads - 1) / threads;
    for (int w = 0; w < threads; ++w) {
        const int lo = w * chunk;
        const int hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &body] {
            for (int i = lo; i < hi; ++i) body(i);
        });
    }
    for (std::thread& th : pool) th.join();
}

}  // namespace flex::detail
