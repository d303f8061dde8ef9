#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>

namespace lonecast {

// Deterministic splittable random stream. Each consumer derives its own
// stream from a root seed plus a key, so results do not depend on the
// order in which independent units of work run.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(mix(seed ^ 0x9e3779b97f4a7c15ull)) {}

    // Derive an independent stream for (seed, key...) without consuming
    // state from this one.
    static Rng derive(uint64_t seed, uint64_t key) {
        return Rng(mix(mix(seed) ^ mix(key + 0x632be59bd9b4e019ull)));
    }

    static Rng derive(uint64_t seed, std::string_view key) {
        uint64_t h = 1469598103934665603ull; // FNV-1a
        for (unsigned char c : key) {
            h ^= c;
            h *= 1099511628211ull;
        }
        return derive(seed, h);
    }

    static Rng derive(uint64_t seed, uint64_t key1, uint64_t key2) {
        return Rng(mix(mix(seed) ^ mix(key1 + 0x632be59bd9b4e019ull) ^
                       mix(key2 + 0xd1b54a32d192ed03ull)));
    }

    uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ull;
        return mix(state_);
    }

    // Uniform in [0, 1).
    double next_double() { return double(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n). n must be > 0.
    uint64_t next_below(uint64_t n) {
        // Rejection-free scaled multiply; bias is negligible for n << 2^64
        // and, more importantly, the result is deterministic.
        return uint64_t((__uint128_t(next_u64()) * n) >> 64);
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // Standard normal via Box-Muller (both values used, deterministically).
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = next_double();
        double u2 = next_double();
        if (u1 < 1e-300) u1 = 1e-300;
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    // Poisson by CDF inversion; fine for the small rates used here.
    long poisson(double lambda) {
        if (lambda <= 0) return 0;
        double u = next_double();
        double p = std::exp(-lambda);
        double cdf = p;
        long k = 0;
        while (u > cdf && k < 10000) {
            ++k;
            p *= lambda / double(k);
            cdf += p;
        }
        return k;
    }

private:
    explicit Rng(uint64_t raw, int) : state_(raw) {}

    static uint64_t mix(uint64_t z) {
        z += 0x9e3779b97f4a7c15ull;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    uint64_t state_;
    double spare_ = 0;
    bool have_spare_ = false;
};

} // namespace lonecast
