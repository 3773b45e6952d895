#pragma once

#include <cstddef>
#include <exception>
#include <thread>
#include <utility>
#include <vector>

namespace bseg {

inline int resolve_threads(int requested) {
    if (requested > 0) return requested;
    unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

/// Runs fn(i) for i in [0, n) with worker w handling i ≡ w (mod t).
/// Each index is processed exactly once and must write only its own output
/// slots, so the result is identical for every thread count.
template <class Fn>
void parallel_strided(std::size_t n, int threads, Fn&& fn) {
    int t = resolve_threads(threads);
    if (n == 0) return;
    if (static_cast<std::size_t>(t) > n) t = static_cast<int>(n);
    if (t <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errs(static_cast<std::size_t>(t));
    pool.reserve(static_cast<std::size_t>(t));
    for (int w = 0; w < t; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = static_cast<std::size_t>(w); i < n;
                     i += static_cast<std::size_t>(t)) {
                    fn(i);
                }
            } catch (...) {
                errs[static_cast<std::size_t>(w)] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& ep : errs) {
        if (ep) std::rethrow_exception(ep);
    }
}

}  // namespace bseg
