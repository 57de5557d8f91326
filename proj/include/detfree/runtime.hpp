#ifndef DETFREE_RUNTIME_HPP
#define DETFREE_RUNTIME_HPP

#include <atomic>
#include <cstdint>
#include <functional>
#include <thread>
#include <vector>

namespace detfree {

inline int resolve_threads(int requested) {
    if (requested > 0) return requested;
    unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
}

// Deterministic parallel map: fn(i) for i in [0, n); results must be written
// into caller-owned slots indexed by i.
inline void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
    threads = resolve_threads(threads);
    if (threads <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            fn(i);
        }
    };
    std::size_t width = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
    pool.reserve(width);
    for (std::size_t t = 0; t < width; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
}

// FNV-1a over a label vector; used to derive per-arrangement RNG streams.
inline std::uint64_t labels_hash(const std::vector<int>& labels, std::uint64_t seed) {
    std::uint64_t h = 14695981039346656037ULL ^ seed;
    for (int v : labels) {
        h ^= static_cast<std::uint64_t>(v) + 0x9e3779b97f4a7c15ULL;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace detfree

#endif
