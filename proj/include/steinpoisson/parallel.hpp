#pragma once

#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace steinpoisson {

/// Thread count resolution: explicit request > STEIN_POISSON_THREADS > hardware.
inline int resolve_threads(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("STEIN_POISSON_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Run fn(i) for i in [0, count) on a worker pool. Callers write results into
/// per-index slots and reduce in index order afterwards, so outputs do not
/// depend on the thread count.
template <class Fn>
void parallel_replications(std::size_t count, int threads, Fn&& fn) {
    threads = resolve_threads(threads);
    if (static_cast<std::size_t>(threads) > count) threads = static_cast<int>(count);
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr error;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int k = 0; k < threads; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

} // namespace steinpoisson
