#ifndef MOBEA_RNG_HPP
#define MOBEA_RNG_HPP

#include <cstdint>
#include <random>

namespace mobea {

// splitmix64 finalizer, used to derive well-separated seeds from
// (base_seed, stream_index) pairs so that parallel workers never share a stream.
inline std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
    return mix_seed(base ^ mix_seed(index + 1));
}

using Rng = std::mt19937_64;

} // namespace mobea

#endif
