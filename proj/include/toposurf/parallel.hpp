// Static-partition parallel_for over an index range.
//
// Each index is processed by exactly one thread and writes only to its own
// output slots, so results are identical for any thread count. Thread count
// resolution order: explicit argument > TOPOSURF_THREADS env var > hardware.
#pragma once

#include <cstdlib>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace toposurf {

inline int resolve_thread_count(int requested = 0) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("TOPOSURF_THREADS")) {
        int n = std::atoi(env);
        if (n > 0) return n;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

template <typename Fn>
void parallel_for(std::size_t begin, std::size_t end, Fn&& fn, int threads = 0) {
    const std::size_t n = end > begin ? end - begin : 0;
    if (n == 0) return;
    int nt = resolve_thread_count(threads);
    if (static_cast<std::size_t>(nt) > n) nt = static_cast<int>(n);
    if (nt <= 1) {
        for (std::size_t i = begin; i < end; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(nt);
    std::exception_ptr first_error;
    std::mutex err_mutex;
    const std::size_t chunk = (n + nt - 1) / nt;
    for (int t = 0; t < nt; ++t) {
        const std::size_t lo = begin + chunk * static_cast<std::size_t>(t);
        const std::size_t hi = std::min(end, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&, lo, hi]() {
            try {
                for (std::size_t i = lo; i < hi; ++i) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace toposurf
