#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace ivim {

/// Resolve a worker-count request: 0 means "use the hardware", anything else
/// is taken literally (clamped to at least 1).
inline int resolve_workers(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

/// Static range partition over [0, n). Each index is processed exactly once;
/// the caller guarantees per-index work touches disjoint state. The first
/// worker exception (if any) is rethrown on the calling thread.
inline void parallel_for(std::int64_t n, int workers, const std::function<void(std::int64_t)>& fn) {
    workers = resolve_workers(workers);
    if (n <= 0) return;
    if (workers <= 1 || n == 1) {
        for (std::int64_t i = 0; i < n; ++i) fn(i);
        return;
    }
    const int nthreads = static_cast<int>(std::min<std::int64_t>(workers, n));
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    std::exception_ptr first_error;
    std::atomic<bool> failed{false};
    std::mutex error_mutex;
    for (int t = 0; t < nthreads; ++t) {
        const std::int64_t lo = n * t / nthreads;
        const std::int64_t hi = n * (t + 1) / nthreads;
        pool.emplace_back([&, lo, hi] {
            try {
                for (std::int64_t i = lo; i < hi; ++i) {
                    if (failed.load(std::memory_order_relaxed)) return;
                    fn(i);
                }
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                failed.store(true, std::memory_order_relaxed);
            }
        });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

} // namespace ivim
