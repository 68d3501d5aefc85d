#pragma once

#include <cstdint>
#include <random>
#include <thread>
#include <vector>

namespace twoscale {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Independent stream for (seed, replica, stage); reproducible regardless of scheduling.
inline std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t replica, std::uint64_t stage) {
    const std::uint64_t k = splitmix64(splitmix64(seed ^ replica) ^ splitmix64(stage + 0x632be59bd9b4e019ULL));
    return std::mt19937_64(k);
}

// Static contiguous chunks; fn(begin, end, worker).
template <class Fn>
void parallel_for(int n, int threads, Fn&& fn) {
    if (n <= 0) return;
    if (threads <= 1 || n == 1) {
        fn(0, n, 0);
        return;
    }
    const int w = std::min(threads, n);
    std::vector<std::thread> pool;
    pool.reserve(w);
    for (int t = 0; t < w; ++t) {
        const int b = static_cast<int>(static_cast<long long>(n) * t / w);
        const int e = static_cast<int>(static_cast<long long>(n) * (t + 1) / w);
        pool.emplace_back([&fn, b, e, t] { fn(b, e, t); });
    }
    for (auto& th : pool) th.join();
}

}  // namespace twoscale
