#pragma once

// Deterministic parallel loops and per-task random streams.

#include <cstdint>
#include <functional>
#include <random>

namespace hyperdrum {

/// Worker count used when a caller passes threads = 0.
unsigned default_threads();

/// Runs fn(i) for i in [0, n) on up to `threads` workers (0 = default).
/// Tasks are claimed in index order; exceptions are rethrown on the calling
/// thread (the one from the lowest failing index).
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn);

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Independent stream for task `index` of a run seeded with `seed`.
inline std::mt19937_64 task_rng(std::uint64_t seed, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                      0x68797072u};
    return std::mt19937_64(seq);
}

}  // namespace hyperdrum
