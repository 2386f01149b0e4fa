#include "slf/core.hpp"

#include <atomic>
#include <thread>

namespace slf {

namespace {
std::atomic<int> g_threads{0};
}

void set_thread_count(int threads) { g_threads = std::max(0, threads); }

int thread_count() {
    const int t = g_threads.load();
    if (t > 0) return t;
    return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(int n, int chunk, const std::function<void(int, int)>& body) {
    if (n <= 0) return;
    chunk = std::max(1, chunk);
    const int chunks = (n + chunk - 1) / chunk;
    const int workers = std::min(thread_count(), chunks);
    if (workers <= 1) {
        for (int c = 0; c < chunks; ++c) body(c * chunk, std::min(n, (c + 1) * chunk));
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(size_t(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (int c = next++; c < chunks; c = next++) body(c * chunk, std::min(n, (c + 1) * chunk));
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace slf
