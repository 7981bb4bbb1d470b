#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "chaoslab/errors.hpp"

namespace chaoslab {

/// Worker count: explicit value if > 0, else CHAOSLAB_WORKERS, else hardware concurrency.
inline unsigned resolve_workers(unsigned requested = 0) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("CHAOSLAB_WORKERS"); env && *env) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (*end != '\0' || v <= 0) throw ConfigError(std::string("CHAOSLAB_WORKERS must be a positive integer, got '") + env + "'");
        return static_cast<unsigned>(v);
    }
    return std::max(1U, std::thread::hardware_concurrency());
}

/// Calls body(i) for i in [0, n) on `workers` threads.
///
/// Indices are handed out in small blocks from a shared counter; results must
/// be written to slot i by the caller, which makes the outcome independent of
/// scheduling and worker count. The first exception thrown is rethrown.
template <typename Body>
void parallel_for(std::size_t n, unsigned workers, Body&& body) {
    workers = std::max(1U, workers);
    if (workers == 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    constexpr std::size_t kBlock = 16;
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto run = [&] {
        while (!failed.load(std::memory_order_relaxed)) {
            const std::size_t begin = next.fetch_add(kBlock);
            if (begin >= n) break;
            const std::size_t end = std::min(n, begin + kBlock);
            try {
                for (std::size_t i = begin; i < end; ++i) body(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                failed = true;
            }
        }
    };
    std::vector<std::thread> pool;
    const unsigned count = static_cast<unsigned>(std::min<std::size_t>(workers, n));
    pool.reserve(count - 1);
    for (unsigned w = 1; w < count; ++w) pool.emplace_back(run);
    run();
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

/// out[i] = fn(first_id + i) for a contiguous stream-id range.
template <typename T, typename Fn>
std::vector<T> parallel_map_ids(std::uint64_t first_id, std::size_t count, unsigned workers, Fn&& fn) {
    std::vector<T> out(count);
    parallel_for(count, workers, [&](std::size_t i) { out[i] = fn(first_id + i); });
    return out;
}

} // namespace chaoslab
