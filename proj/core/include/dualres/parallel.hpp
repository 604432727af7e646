#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>

namespace dualres {

// Thread count from DUALRES_THREADS, else hardware concurrency (>= 1).
int default_threads();

// Runs fn(begin, end, worker) over contiguous chunks of [0, n) on up to
// `threads` threads. Chunking is static so per-chunk results are
// independent of scheduling.
void parallel_for(std::size_t n, int threads,
                  const std::function<void(std::size_t, std::size_t, int)>& fn);

// Deterministic stream splitting: every (seed, stream) pair maps to an
// independent 64-bit generator seed via SplitMix64 mixing.
std::uint64_t split_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
  return Rng(split_seed(seed, stream));
}

}  // namespace dualres
