#pragma once

#include <cstdint>

namespace stograph {

// Counter-based generator built on the SplitMix64 output function.  Every
// draw is a pure function of (key, counter), so independently keyed streams
// can be consumed from any thread in any order and still reproduce the same
// values bit for bit.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t key) : key_(key) {}

    /// Derive a stream key from a master seed and up to two stream indices.
    static CounterRng keyed(std::uint64_t seed, std::uint64_t stream, std::uint64_t substream = 0) {
        std::uint64_t k = mix(seed + 0x9E3779B97F4A7C15ULL);
        k = mix(k ^ mix(stream + 0xBF58476D1CE4E5B9ULL));
        k = mix(k ^ mix(substream + 0x94D049BB133111EBULL));
        return CounterRng(k);
    }

    std::uint64_t next_u64() { return mix(key_ + (++counter_) * 0x9E3779B97F4A7C15ULL); }

    /// Uniform double in [0,1) with 53 random bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + (b - a) * next_double(); }

    /// Unbiased integer in [0,n) by rejection.
    std::uint64_t next_below(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x = next_u64();
        while (x >= limit) x = next_u64();
        return x % n;
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace stograph
