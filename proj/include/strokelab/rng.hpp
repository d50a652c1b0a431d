#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace strokelab {

/// Keyed, counter-style random streams. Every consumer derives its own
/// stream from (seed, structured key), so adding users/days/strokes to a
/// run never perturbs the draws of existing entities, and parallel
/// execution order cannot change results.
namespace rng {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Order-sensitive fold of key parts into a 64-bit stream key.
struct KeyHasher {
    std::uint64_t state;

    explicit KeyHasher(std::uint64_t seed) : state(splitmix64(seed ^ 0x5bd1e995u)) {}

    KeyHasher& mix(std::uint64_t v) {
        state = splitmix64(state ^ v);
        return *this;
    }
    KeyHasher& mix(std::string_view s) { return mix(fnv1a64(s)); }
    KeyHasher& mix(int v) { return mix(static_cast<std::uint64_t>(static_cast<std::int64_t>(v))); }
};

template <typename... Parts>
std::uint64_t derive_key(std::uint64_t seed, Parts&&... parts) {
    KeyHasher h(seed);
    (h.mix(parts), ...);
    return h.state;
}

/// xoshiro256** seeded from a derived key via splitmix64 expansion.
class Stream {
public:
    explicit Stream(std::uint64_t key) {
        std::uint64_t sm = key;
        for (auto& w : s_) {
            sm = splitmix64(sm);
            w = sm;
        }
        if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Uniform in [0, 1) with 53-bit resolution.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n). n must be > 0.
    std::uint32_t next_below(std::uint32_t n) {
        // Lemire bounded rejection; unbiased and cheap.
        std::uint64_t x = next_u64() >> 32;
        std::uint64_t m = x * n;
        std::uint32_t l = static_cast<std::uint32_t>(m);
        if (l < n) {
            std::uint32_t t = (0u - n) % n;
            while (l < t) {
                x = next_u64() >> 32;
                m = x * n;
                l = static_cast<std::uint32_t>(m);
            }
        }
        return static_cast<std::uint32_t>(m >> 32);
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    /// Standard normal via Box-Muller (second value cached).
    double normal() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        double u1 = next_double();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        const double u2 = next_double();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        cached_ = r * std::sin(a);
        have_cached_ = true;
        return r * std::cos(a);
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    /// Beta(2,2) draw: the median of three uniforms (2nd order statistic
    /// of 3 is exactly Beta(2,2)).
    double beta22() {
        double a = next_double(), b = next_double(), c = next_double();
        if (a > b) std::swap(a, b);
        if (b > c) std::swap(b, c);
        if (a > b) std::swap(a, b);
        return b;
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::uint64_t s_[4];
    double cached_ = 0.0;
    bool have_cached_ = false;
};

} // namespace rng
} // namespace strokelab
