#pragma once

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace doseadapt {

/// Worker count: `requested` if positive, otherwise hardware concurrency,
/// capped by the DOSEADAPT_THREADS environment variable when set.
inline int resolve_threads(int requested) {
    int n = requested > 0 ? requested
                          : static_cast<int>(std::thread::hardware_concurrency());
    if (n < 1) n = 1;
    if (const char* env = std::getenv("DOSEADAPT_THREADS")) {
        int cap = std::atoi(env);
        if (cap > 0) n = std::min(n, cap);
    }
    return n;
}

/// Run body(first, last, worker) over [0, count) split into contiguous
/// chunks. Workers must only merge results in an order-independent way.
inline void parallel_chunks(long count, int threads,
                            const std::function<void(long, long, int)>& body) {
    threads = std::min<long>(threads, std::max<long>(count, 1));
    if (threads <= 1) {
        body(0, count, 0);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(threads);
    const long chunk = (count + threads - 1) / threads;
    for (int w = 0; w < threads; ++w) {
        const long first = static_cast<long>(w) * chunk;
        const long last = std::min(count, first + chunk);
        if (first >= last) break;
        pool.emplace_back([&body, first, last, w] { body(first, last, w); });
    }
    for (auto& t : pool) t.join();
}

}  // namespace doseadapt
