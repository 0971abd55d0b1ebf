#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <thread>
#include <vector>

namespace dald {

// Runs fn(i) for i in [0, n) over a bounded worker pool. Work items are
// independent; callers keep determinism by indexing their outputs.
inline void parallel_for(size_t n, size_t jobs, const std::function<void(size_t)>& fn) {
    if (jobs == 0) jobs = std::thread::hardware_concurrency();
    if (jobs <= 1 || n <= 1) {
        for (size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    jobs = std::min(jobs, n);
    std::vector<std::thread> workers;
    workers.reserve(jobs);
    for (size_t w = 0; w < jobs; ++w) {
        workers.emplace_back([&, w] {
            for (size_t i = w; i < n; i += jobs) fn(i);
        });
    }
    for (auto& t : workers) t.join();
}

inline uint64_t fnv1a(const std::string& data) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(uint64_t v);

}  // namespace dald
