#pragma once
// Deterministic parallel-for over path indices. Each worker claims indices
// from an atomic counter and writes into its own pre-sized slot, so results
// are independent of the thread count and interleaving.

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace plevy {

template <typename Fn>
void parallel_for(int count, int threads, Fn&& fn) {
    if (count <= 0) return;
    threads = std::max(1, std::min(threads, count));
    if (threads == 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                const int i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

inline int clamp_threads(int requested) {
    const int cores = static_cast<int>(std::thread::hardware_concurrency());
    const int limit = cores > 0 ? cores : 1;
    if (requested < 1) return 1;
    return std::min(requested, limit);
}

}  // namespace plevy
