#pragma once

#include <functional>
#include <thread>
#include <vector>

namespace logroot::detail {

/// Runs fn(i) for i in [0, count) on up to `threads` workers. Work is split
/// into fixed index ranges, so results written into per-index slots are
/// identical for every thread count.
inline void parallel_for_index(size_t count, int threads, const std::function<void(size_t)>& fn) {
    if (threads <= 1 || count <= 1) {
        for (size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    size_t workers = std::min<size_t>(static_cast<size_t>(threads), count);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (size_t t = 0; t < workers; ++t) {
        pool.emplace_back([&, t] {
            for (size_t i = t; i < count; i += workers) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace logroot::detail
