#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace gradebal {

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Counter-based generator: draw k of a stream is mix64(seed + (k + 1) * golden),
/// so any draw can be recomputed from (seed, k) alone. Identical to the
/// SplitMix64 sequence for the same seed.
class CounterRng {
public:
    static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

    explicit constexpr CounterRng(std::uint64_t seed) noexcept : seed_(seed) {}

    constexpr std::uint64_t next_u64() noexcept {
        ++counter_;
        return mix64(seed_ + counter_ * kGolden);
    }

    // Uniform in [0, 1) with 53 bits of resolution.
    double uniform() noexcept {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform in [lo, hi]; returns lo exactly when lo == hi.
    double uniform(double lo, double hi) noexcept {
        const double u = uniform();
        if (lo == hi)
            return lo;
        return lo + (hi - lo) * u;
    }

    // Uniform integer in [0, n) by 128-bit multiply-high.
    std::uint64_t below(std::uint64_t n) noexcept {
        const unsigned __int128 wide = static_cast<unsigned __int128>(next_u64()) * n;
        return static_cast<std::uint64_t>(wide >> 64);
    }

    std::uint64_t draws() const noexcept { return counter_; }

private:
    std::uint64_t seed_;
    std::uint64_t counter_ = 0;
};

// Combine a seed with a stream selector (class id, epoch, ...).
constexpr std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
    return mix64(seed ^ mix64(stream + CounterRng::kGolden));
}

// 64-bit FNV-1a.
class Fnv1a64 {
public:
    static constexpr std::uint64_t kOffset = 0xcbf29ce484222325ULL;
    static constexpr std::uint64_t kPrime = 0x100000001b3ULL;

    constexpr void byte(std::uint8_t b) noexcept {
        state_ ^= b;
        state_ *= kPrime;
    }
    constexpr void bytes(std::string_view s) noexcept {
        for (char c : s)
            byte(static_cast<std::uint8_t>(c));
    }
    constexpr void u64_le(std::uint64_t v) noexcept {
        for (int i = 0; i < 8; ++i)
            byte(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    constexpr std::uint64_t value() const noexcept { return state_; }

private:
    std::uint64_t state_ = kOffset;
};

inline std::uint64_t fnv1a64(std::string_view s) noexcept {
    Fnv1a64 h;
    h.bytes(s);
    return h.value();
}

} // namespace gradebal
