#pragma once

#include <cstdint>
#include <random>

namespace fkh {

/**
 * Derives statistically independent sub-seeds from a master seed, so that
 * parallel or per-sample generators can be created deterministically: stream i
 * always produces the same generator for a given master seed, independent of
 * thread scheduling.
 */
inline std::uint64_t split_seed(std::uint64_t master, std::uint64_t stream) {
    // SplitMix64 step applied to master ^ golden-ratio-scrambled stream index.
    std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::mt19937_64 make_rng(std::uint64_t master, std::uint64_t stream = 0) {
    return std::mt19937_64(split_seed(master, stream));
}

}  // namespace fkh
