#pragma once

#include <cstdint>
#include <random>

namespace remmap {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Independent generator for (seed, index, stream). The same triple always
/// gives the same sequence regardless of what else has been drawn.
inline std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t index,
                                    std::uint64_t stream) {
    const std::uint64_t mixed =
        splitmix64(splitmix64(splitmix64(seed) ^ index) ^ (stream * 0xd1b54a32d192ed03ULL));
    return std::mt19937_64(mixed);
}

}  // namespace remmap
