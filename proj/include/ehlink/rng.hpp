#pragma once

#include <cstdint>
#include <random>

namespace ehlink {

/// Mixes a base seed with a stream index so that parallel shards draw from
/// decorrelated, reproducible streams. splitmix64 finalizer.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Uniform draw on the open interval (0, 1). The conversion from raw engine
/// output is spelled out here instead of using std::uniform_real_distribution
/// so that sequences are identical across standard library implementations.
inline double uniform_open(std::mt19937_64& engine) {
    return (static_cast<double>(engine() >> 11) + 0.5) * 0x1.0p-53;
}

/// Uniform draw on [0, 1).
inline double uniform_half_open(std::mt19937_64& engine) {
    return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

}  // namespace ehlink
