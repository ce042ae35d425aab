#include "procrustes/seed.hpp"

namespace procrustes {

std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

Engine make_engine(const SeedSpec& seed) {
    const std::uint64_t a = mix64(seed.master_seed);
    const std::uint64_t b = mix64(a ^ mix64(seed.stream_index ^ 0x6a09e667f3bcc909ULL));
    std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                      static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
    return Engine(seq);
}

SeedSpec derive_seed(std::uint64_t master, std::uint64_t cell, std::uint64_t repetition) noexcept {
    const std::uint64_t h = mix64(mix64(mix64(master) ^ cell) ^ mix64(repetition + 0x3c6ef372fe94f82bULL));
    return SeedSpec{master, h};
}

}  // namespace procrustes
