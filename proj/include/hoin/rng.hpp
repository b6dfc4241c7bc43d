#pragma once
#include <cstdint>
#include <cmath>
#include <string_view>

namespace hoin {

// FNV-1a, used to derive per-purpose seed streams from one run seed.
inline uint64_t fnv1a64(std::string_view s) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

// SplitMix64. One instance per (seed, purpose) stream; streams for "init",
// "noise", "mask", "fourier-B" are decorrelated by hashing the label into
// the seed.
struct Rng {
    uint64_t state;

    explicit Rng(uint64_t seed) : state(seed) {}
    Rng(uint64_t seed, std::string_view purpose) : state(seed ^ fnv1a64(purpose)) {}

    uint64_t next() {
        uint64_t z = (state += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // uniform in [0,1)
    double uniform01() { return double(next() >> 11) * 0x1.0p-53; }
    // uniform in (0,1], never zero (safe under log)
    double uniform01_open0() { return double((next() >> 11) + 1) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Box-Muller, pairs cached
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform01_open0();
        double u2 = uniform01();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

  private:
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace hoin
