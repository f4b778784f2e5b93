#pragma once

#include <cmath>
#include <cstdint>

namespace grainstat::rng {

// 64-bit finalizer used for seed mixing (splitmix64 output function).
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// xoshiro256++ stream. Streams are derived from (seed, stream index) so that
// replication k of a run always sees the same variates no matter how
// replications are distributed over workers.
class Stream {
public:
    Stream(std::uint64_t seed, std::uint64_t stream_index) {
        std::uint64_t h = mix64(seed) ^ mix64(stream_index * 0xD1B54A32D192ED03ull + 0x8CB92BA72F3D8DD7ull);
        for (auto& w : s_) {
            h += 0x9E3779B97F4A7C15ull;
            w = mix64(h);
        }
        s_[0] |= 1;  // never all-zero
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform on [0, 1).
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // Exact Poisson sampling. Product-of-uniforms for small means, otherwise
    // the exponential-interarrival form, which is safe for any mean.
    std::uint64_t poisson(double mean) {
        if (mean <= 0.0) return 0;
        if (mean < 30.0) {
            const double threshold = std::exp(-mean);
            std::uint64_t n = 0;
            double prod = next_double();
            while (prod > threshold) {
                ++n;
                prod *= next_double();
            }
            return n;
        }
        std::uint64_t n = 0;
        double acc = 0.0;
        for (;;) {
            double u = next_double();
            while (u <= 0.0) u = next_double();
            acc += -std::log(u);
            if (acc > mean) return n;
            ++n;
        }
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::uint64_t s_[4];
};

// Deterministic sub-seed for a named role within a larger computation.
inline std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t tag) {
    return mix64(seed ^ mix64(tag + 0x632BE59BD9B4E019ull));
}

}  // namespace grainstat::rng
