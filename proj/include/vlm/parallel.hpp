#pragma once

#include <atomic>
#include <functional>
#include <thread>
#include <vector>

namespace vlm {

// Index-based parallel map. Each worker pulls indices from a shared counter
// and writes results only into its own slot, so the output is identical for
// any thread count. threads <= 1 runs inline.
inline void parallel_for(int64_t n, int threads, const std::function<void(int64_t)>& fn) {
    if (n <= 0) return;
    if (threads <= 1 || n == 1) {
        for (int64_t i = 0; i < n; ++i) fn(i);
        return;
    }
    int nw = static_cast<int>(std::min<int64_t>(threads, n));
    std::atomic<int64_t> next{0};
    std::vector<std::thread> workers;
    workers.reserve(nw);
    std::exception_ptr first_error = nullptr;
    std::atomic<bool> failed{false};
    for (int w = 0; w < nw; ++w) {
        workers.emplace_back([&] {
            for (;;) {
                int64_t i = next.fetch_add(1);
                if (i >= n || failed.load()) break;
                try {
                    fn(i);
                } catch (...) {
                    if (!failed.exchange(true)) first_error = std::current_exception();
                    break;
                }
            }
        });
    }
    for (auto& t : workers) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

inline int default_threads() {
    unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

} // namespace vlm
