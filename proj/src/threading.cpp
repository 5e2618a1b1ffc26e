#include "tomflow/threading.hpp"

#include <algorithm>
#include <atomic>
#include <thread>
#include <vector>

namespace tomflow {

namespace {
std::atomic<int> g_threads{1};
}

void set_threads(int n) { g_threads.store(std::max(1, n)); }

int threads() { return g_threads.load(); }

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    const int nt = std::min<std::size_t>(g_threads.load(), n);
    if (nt <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(nt);
    for (int w = 0; w < nt; ++w) {
        const std::size_t lo = n * w / nt;
        const std::size_t hi = n * (w + 1) / nt;
        pool.emplace_back([lo, hi, &fn] {
            for (std::size_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

} // namespace tomflow
