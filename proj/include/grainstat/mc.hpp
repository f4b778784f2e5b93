#pragma once

#include <atomic>
#include <cstdint>
#include <thread>
#include <vector>

#include "grainstat/rng.hpp"

namespace grainstat::mc {

// Replication-parallel driver with results that do not depend on the worker
// count: replication i always draws from the stream derived from (seed, i),
// chunks own their partial accumulators, and partials are merged in chunk
// order at the end. Acc needs a default constructor and merge(const Acc&).
//
// make_body() is called once per worker and may own scratch buffers; the
// returned callable runs as body(rep_index, stream, acc).
template <class Acc, class BodyFactory>
Acc run_replications(std::int64_t n, std::uint64_t seed, int workers, BodyFactory&& make_body,
                     std::int64_t chunk_size = 4096) {
    if (n <= 0) return Acc{};
    if (workers < 1) workers = 1;
    const std::int64_t n_chunks = (n + chunk_size - 1) / chunk_size;
    std::vector<Acc> partials(static_cast<std::size_t>(n_chunks));

    std::atomic<std::int64_t> next_chunk{0};
    auto work = [&]() {
        auto body = make_body();
        for (;;) {
            const std::int64_t c = next_chunk.fetch_add(1);
            if (c >= n_chunks) return;
            Acc acc{};
            const std::int64_t lo = c * chunk_size;
            const std::int64_t hi = std::min(n, lo + chunk_size);
            for (std::int64_t i = lo; i < hi; ++i) {
                rng::Stream stream(seed, static_cast<std::uint64_t>(i));
                body(i, stream, acc);
            }
            partials[static_cast<std::size_t>(c)] = std::move(acc);
        }
    };

    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }

    Acc total{};
    for (Acc& p : partials) total.merge(p);
    return total;
}

}  // namespace grainstat::mc
