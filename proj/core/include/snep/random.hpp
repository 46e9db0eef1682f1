#pragma once

#include <cstdint>

namespace snep {

/// SplitMix64 finalizer; a bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Maps 64 random bits to the open interval (0, 1) using the top 53 bits.
constexpr double to_unit_open(std::uint64_t bits) noexcept {
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

/// Counter-based stream: draw(i, j) is a pure function of (seed, i, j).
class CounterRng {
public:
    constexpr explicit CounterRng(std::uint64_t seed) noexcept : key_(mix64(seed)) {}

    constexpr double uniform(std::uint64_t counter, std::uint64_t lane) const noexcept {
        return to_unit_open(mix64(key_ ^ mix64(counter * 0x100000001b3ULL + mix64(lane))));
    }

private:
    std::uint64_t key_;
};

}  // namespace snep
