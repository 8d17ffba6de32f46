#pragma once

#include <algorithm>
#include <atomic>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace mrlft {

// Worker count: explicit request, else MRLFT_JOBS, else hardware concurrency.
int default_jobs(int requested = 0);

// Applies fn(i) for i in [0, n) with up to `jobs` threads and returns the
// results in index order, so the outcome is independent of the worker count.
template <typename T>
std::vector<T> parallel_map(int n, const std::function<T(int)>& fn, int jobs = 0) {
    std::vector<T> out(static_cast<size_t>(std::max(n, 0)));
    if (n <= 0) return out;
    const int workers = std::min(default_jobs(jobs), n);
    if (workers <= 1) {
        for (int i = 0; i < n; ++i) out[i] = fn(i);
        return out;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mx;
    auto body = [&] {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= n) return;
            try {
                out[i] = fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mx);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int t = 0; t < workers; ++t) pool.emplace_back(body);
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
    return out;
}

}  // namespace mrlft
