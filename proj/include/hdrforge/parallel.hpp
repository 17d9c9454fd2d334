// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the hdrforge project.

#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace hdrforge {

namespace detail {
inline std::atomic<int> &thread_cap() {
    static std::atomic<int> cap{0};
    return cap;
}
} // namespace detail

/// Caps the worker count used by data-parallel loops. 0 means "auto"
/// (hardware concurrency).
inline void set_max_threads(int n) { detail::thread_cap().store(std::max(0, n)); }

inline int max_threads() {
    int cap = detail::thread_cap().load();
    if (cap > 0)
        return cap;
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Reads HDRFORGE_THREADS. Returns false when the variable is set but not a
/// positive integer.
inline bool configure_threads_from_env() {
    const char *raw = std::getenv("HDRFORGE_THREADS");
    if (raw == nullptr || *raw == '\0')
        return true;
    char *end = nullptr;
    long v = std::strtol(raw, &end, 10);
    if (*end != '\0' || v <= 0)
        return false;
    set_max_threads(static_cast<int>(v));
    return true;
}

/// Runs body(begin, end) over contiguous chunks of [0, n). Each index is
/// visited exactly once and chunks never share outputs, so results do not
/// depend on the partitioning as long as body writes per-index results.
template <typename Body> void parallel_for(std::size_t n, Body &&body) {
    const std::size_t workers =
        std::min<std::size_t>(static_cast<std::size_t>(max_threads()), n);
    if (workers <= 1 || n < 64) {
        body(std::size_t{0}, n);
        return;
    }
    std::vector<std::thread> pool;
    std::exception_ptr error;
    std::mutex error_mutex;
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        std::size_t begin = w * chunk;
        std::size_t end = std::min(n, begin + chunk);
        if (begin >= end)
            break;
        pool.emplace_back([&, begin, end] {
            try {
                body(begin, end);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error)
                    error = std::current_exception();
            }
        });
    }
    for (auto &t : pool)
        t.join();
    if (error)
        std::rethrow_exception(error);
}

} // namespace hdrforge
