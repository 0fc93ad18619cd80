#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace sf {

namespace detail {
inline std::atomic<int>& thread_setting() {
    static std::atomic<int> n{0};
    return n;
}
} // namespace detail

// 0 means "not set": fall back to SCALARFORGE_THREADS, then 1.
inline void set_threads(int n) { detail::thread_setting() = std::max(0, n); }

inline int threads() {
    int n = detail::thread_setting();
    if (n > 0) return n;
    if (const char* env = std::getenv("SCALARFORGE_THREADS")) {
        int e = std::atoi(env);
        if (e > 0) return e;
    }
    return 1;
}

// Static block partition so every index is always handled by the same
// worker for a given thread count; callers write to disjoint slots and
// reduce afterwards in index order, which keeps results reproducible.
template <class F>
void parallel_for(std::size_t count, F&& body) {
    int nt = std::min<std::size_t>(threads(), std::max<std::size_t>(count, 1));
    if (nt <= 1 || count < 2) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::exception_ptr err;
    std::mutex err_mutex;
    std::vector<std::thread> pool;
    pool.reserve(nt);
    for (int w = 0; w < nt; ++w) {
        std::size_t lo = count * w / nt, hi = count * (w + 1) / nt;
        pool.emplace_back([&, lo, hi] {
            try {
                for (std::size_t i = lo; i < hi; ++i) body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lk(err_mutex);
                if (!err) err = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

} // namespace sf
