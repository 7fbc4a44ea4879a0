#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace salvo {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Derives an independent stream seed from a master seed and counters.
/// Counter-based so that parallel scheduling never changes the draws.
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> counters) {
    std::uint64_t state = master;
    std::uint64_t out = splitmix64(state);
    for (std::uint64_t c : counters) {
        state ^= c + 0x9e3779b97f4a7c15ULL + (state << 6) + (state >> 2);
        out = splitmix64(state);
    }
    return out;
}

inline std::mt19937_64 make_engine(std::uint64_t master, std::initializer_list<std::uint64_t> counters = {}) {
    return std::mt19937_64(derive_seed(master, counters));
}

}  // namespace salvo
