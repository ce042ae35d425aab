#pragma once

#include <cstdint>
#include <random>

namespace procrustes {

/// Identifies one independent random stream.
struct SeedSpec {
    std::uint64_t master_seed = 0;
    std::uint64_t stream_index = 0;

    friend bool operator==(const SeedSpec&, const SeedSpec&) = default;
};

using Engine = std::mt19937_64;

/// 64-bit avalanche mixer (splitmix64 finalizer).
std::uint64_t mix64(std::uint64_t z) noexcept;

/// Engine for the stream named by `seed`. Distinct (master, stream) pairs give
/// unrelated engine states.
Engine make_engine(const SeedSpec& seed);

/// Seed of trial `repetition` in grid cell `cell` of a campaign rooted at `master`.
/// Pure integer arithmetic, so the mapping is identical on every platform.
SeedSpec derive_seed(std::uint64_t master, std::uint64_t cell, std::uint64_t repetition) noexcept;

}  // namespace procrustes
