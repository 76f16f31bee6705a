#ifndef EVMC_RNG_HPP
#define EVMC_RNG_HPP

#include <cstdint>
#include <random>

namespace evmc {

/// splitmix64 mixing step; used to derive independent child seeds from a
/// base seed and an index so parallel workers stay reproducible.
inline std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t child_seed(std::uint64_t base, std::uint64_t index) {
    return mix_seed(base ^ mix_seed(index + 1));
}

inline std::mt19937_64 make_rng(std::uint64_t seed) { return std::mt19937_64(seed); }

} // namespace evmc

#endif
