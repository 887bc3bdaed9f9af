#pragma once

#include <cstdint>
#include <vector>

namespace treelab {

// splitmix64, used to derive independent streams from (seed, tag...) tuples.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag) {
    return splitmix64(seed ^ splitmix64(tag));
}

inline std::uint64_t hash_ints(std::uint64_t seed, const std::vector<int>& xs) {
    std::uint64_t h = splitmix64(seed ^ 0x5bf03635f0935ad1ULL);
    for (int v : xs) h = splitmix64(h ^ static_cast<std::uint64_t>(static_cast<std::uint32_t>(v)));
    return h;
}

// PCG32 (XSH RR). We avoid <random> distributions on purpose: their output is
// implementation-defined, and reports must be reproducible bit-for-bit.
class Pcg32 {
public:
    explicit Pcg32(std::uint64_t seed, std::uint64_t stream = 0x853c49e6748fea9bULL) {
        state_ = 0;
        inc_ = (stream << 1u) | 1u;
        next_u32();
        state_ += seed;
        next_u32();
    }

    std::uint32_t next_u32() {
        std::uint64_t old = state_;
        state_ = old * 6364136223846793005ULL + inc_;
        std::uint32_t xorshifted = static_cast<std::uint32_t>(((old >> 18u) ^ old) >> 27u);
        std::uint32_t rot = static_cast<std::uint32_t>(old >> 59u);
        return (xorshifted >> rot) | (xorshifted << ((32u - rot) & 31u));
    }

    std::uint64_t next_u64() {
        std::uint64_t hi = next_u32();
        return (hi << 32) | next_u32();
    }

    // Uniform in [0,1) with 53 random bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in (-1,1); zero is possible and harmless.
    double next_signed() { return 2.0 * next_double() - 1.0; }

    // Uniform integer in [0, bound).
    std::uint32_t next_below(std::uint32_t bound) {
        if (bound <= 1) return 0;
        std::uint32_t threshold = static_cast<std::uint32_t>(-bound) % bound;
        for (;;) {
            std::uint32_t r = next_u32();
            if (r >= threshold) return r % bound;
        }
    }

private:
    std::uint64_t state_;
    std::uint64_t inc_;
};

}  // namespace treelab
