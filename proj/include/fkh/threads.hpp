#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace fkh {

/**
 * Resolves the worker count: an explicit request wins, then the
 * FRAC_HESSIAN_THREADS environment variable, then hardware concurrency.
 */
inline int resolve_threads(int requested = 0) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("FRAC_HESSIAN_THREADS")) {
        int v = std::atoi(env);
        if (v > 0) return v;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

/**
 * Runs body(i) for i in [0, count) on up to n_threads workers.  Work is
 * partitioned by index, and each index's result must be written to a slot
 * owned by that index, so results are identical for any worker count.  The
 * first exception thrown by any body is rethrown to the caller after all
 * workers finish (remaining iterations are skipped).
 */
inline void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body,
                         int n_threads = 0) {
    int workers = std::min<std::size_t>(resolve_threads(n_threads), count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::atomic<bool> failed{false};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < count && !failed.load(std::memory_order_relaxed);
                 i += workers) {
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                    failed.store(true, std::memory_order_relaxed);
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace fkh
