#pragma once

#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace causalid {

// Parallelism cap: CAUSALID_THREADS env var, else hardware concurrency.
inline int max_threads() {
    if (const char* env = std::getenv("CAUSALID_THREADS")) {
        const int v = std::atoi(env);
        if (v >= 1) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

// Static partition over [0, count); each index writes only its own results,
// so the outcome is independent of scheduling.
inline void parallel_for(int count, const std::function<void(int)>& fn) {
    const int workers = std::min(max_threads(), count);
    if (workers <= 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w]() {
            for (int i = w; i < count; i += workers) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

} // namespace causalid
