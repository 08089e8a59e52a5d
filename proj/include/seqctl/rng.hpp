#pragma once

#include <cstdint>
#include <random>

namespace seqctl {

// Independent random streams per consumer, so that noise paths and interval
// draws of one trajectory never share a generator.
enum class Stream : std::uint64_t {
    NoisePath = 1,
    Intervals = 2,
    LdReference = 3,
};

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Counter-based sub-seed: a pure function of (master seed, stream, index), so
// the generator handed to trajectory k does not depend on scheduling order.
constexpr std::uint64_t sub_seed(std::uint64_t master_seed, Stream stream,
                                 std::uint64_t index) noexcept {
    return splitmix64(splitmix64(master_seed ^ splitmix64(static_cast<std::uint64_t>(stream))) + index);
}

inline std::mt19937_64 make_rng(std::uint64_t master_seed, Stream stream, std::uint64_t index) {
    return std::mt19937_64(sub_seed(master_seed, stream, index));
}

}  // namespace seqctl
