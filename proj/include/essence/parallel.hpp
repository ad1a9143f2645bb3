#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace essence {

/**
 * Runs `fn(worker, i)` for i in [0, n) on up to `threads` workers. Work is
 * handed out by an atomic counter; results must be written to per-index
 * slots so that the outcome does not depend on scheduling.
 */
template <class F>
void parallel_for(std::size_t n, std::size_t threads, F&& fn) {
    threads = std::max<std::size_t>(1, std::min(threads, n));
    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i) {
            fn(std::size_t{0}, i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        for (std::size_t w = 0; w < threads; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t i = next++; i < n; i = next++) {
                        fn(w, i);
                    }
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) {
                        error = std::current_exception();
                    }
                    next = n;
                }
            });
        }
    }
    if (error) {
        std::rethrow_exception(error);
    }
}

inline std::size_t default_thread_count() {
    return std::max<unsigned>(1, std::thread::hardware_concurrency());
}

}  // namespace essence
