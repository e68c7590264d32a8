#pragma once

#include "certlab/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace certlab {

/// Samples per RngStream substream. Chunk c of a job always draws from
/// root.substream(c), so results do not depend on the worker count.
inline constexpr std::size_t kChunkSize = 10'000;

inline std::size_t chunk_count(std::size_t n) { return (n + kChunkSize - 1) / kChunkSize; }

/// Runs `body(chunk_index, chunk_samples, rng)` for every chunk of an
/// n-sample job, spread over `workers` threads. Each call gets its own
/// substream. Per-chunk results must be combined by the caller in an
/// order-independent way (or stored by chunk index).
template <typename Body>
void for_each_chunk(std::size_t n, unsigned workers, const RngStream& root, Body&& body) {
    const std::size_t chunks = chunk_count(n);
    auto run_one = [&](std::size_t c) {
        RngStream rng = root.substream(c);
        const std::size_t count = std::min(kChunkSize, n - c * kChunkSize);
        body(c, count, rng);
    };
    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(chunks)));
    if (workers <= 1) {
        for (std::size_t c = 0; c < chunks; ++c) run_one(c);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t c = next++; c < chunks; c = next++) {
                try {
                    run_one(c);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                    next = chunks;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace certlab
