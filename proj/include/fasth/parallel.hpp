#pragma once

#include <atomic>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace fasth {

namespace detail {
inline std::atomic<int>& thread_count_slot() {
    static std::atomic<int> n{0}; // 0 = use hardware concurrency
    return n;
}
} // namespace detail

inline int hardware_threads() {
    unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : static_cast<int>(n);
}

/// Worker count for block-parallel sections. 0 means "all hardware threads";
/// 1 forces single-threaded execution (the determinism switch).
inline void set_num_threads(int n) { detail::thread_count_slot().store(n < 0 ? 0 : n); }

inline int num_threads() {
    int n = detail::thread_count_slot().load();
    return n == 0 ? hardware_threads() : n;
}

/// Parallel-for over [0, n). Tasks must write to disjoint slots; there is no
/// reduction, so results are bitwise identical regardless of the worker count.
template <typename F>
void parallel_for(std::size_t n, F&& body) {
    const std::size_t workers =
        std::min<std::size_t>(static_cast<std::size_t>(num_threads()), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                body(i);
            }
        });
    }
    for (auto& t : pool) t.join();
}

} // namespace fasth
