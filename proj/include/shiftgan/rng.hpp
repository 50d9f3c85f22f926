#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace shiftgan {

/// PCG32 generator. Self-contained so that seeded runs produce identical
/// streams on every platform and compiler (std:: distributions do not
/// guarantee that).
class Rng {
public:
    explicit Rng(uint64_t seed, uint64_t stream = 0) : seed_(seed) {
        state_ = 0u;
        inc_ = (stream << 1u) | 1u;
        next_u32();
        state_ += seed;
        next_u32();
    }

    uint32_t next_u32() {
        uint64_t old = state_;
        state_ = old * 6364136223846793005ULL + inc_;
        uint32_t xorshifted = static_cast<uint32_t>(((old >> 18u) ^ old) >> 27u);
        uint32_t rot = static_cast<uint32_t>(old >> 59u);
        return (xorshifted >> rot) | (xorshifted << ((-rot) & 31u));
    }

    /// uniform in [0,1)
    float uniform() {
        return static_cast<float>(next_u32() >> 8) * (1.0f / 16777216.0f);
    }

    /// uniform integer in [lo, hi] inclusive
    int uniform_int(int lo, int hi) {
        uint32_t span = static_cast<uint32_t>(hi - lo + 1);
        return lo + static_cast<int>(next_u32() % span);
    }

    /// standard normal via Box-Muller (two uniforms per draw, no cached spare)
    float normal() {
        float u1 = uniform();
        float u2 = uniform();
        if (u1 < 1e-12f) u1 = 1e-12f;
        return std::sqrt(-2.0f * std::log(u1)) * std::cos(6.28318530717958647692f * u2);
    }

    float normal(float mean, float stddev) { return mean + stddev * normal(); }

    /// Independent substream for a named purpose, so that consuming draws for
    /// one purpose (e.g. shift offsets) never perturbs another (e.g. crops).
    /// Pure function of (seed, purpose).
    Rng derive(std::string_view purpose) const {
        uint64_t h = 1469598103934665603ULL;
        for (char c : purpose) {
            h ^= static_cast<unsigned char>(c);
            h *= 1099511628211ULL;
        }
        return Rng(seed_ ^ h, h);
    }

    uint64_t seed() const { return seed_; }

private:
    uint64_t seed_ = 0;
    uint64_t state_ = 0;
    uint64_t inc_ = 1;
};

} // namespace shiftgan
