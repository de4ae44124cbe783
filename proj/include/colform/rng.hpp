#pragma once

#include <cstdint>
#include <random>

namespace colform {

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Derives an independent stream seed from a base seed and counters.
inline uint64_t mix_seed(uint64_t base, uint64_t a, uint64_t b = 0, uint64_t c = 0) {
    uint64_t s = splitmix64(base ^ 0xa0761d6478bd642fULL);
    s = splitmix64(s ^ a);
    s = splitmix64(s ^ b);
    return splitmix64(s ^ c);
}

// mt19937_64 wrapper with fully specified draw helpers so that every
// sampled value is reproducible across platforms (the std distributions
// are implementation defined).
class Rng {
public:
    explicit Rng(uint64_t seed) : eng_(seed) {}

    uint64_t next() { return eng_(); }

    // Uniform in [0, 1), 53-bit resolution.
    double u01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * u01(); }

    // Uniform integer in [lo, hi] via rejection-free Lemire-style reduction.
    int uniform_int(int lo, int hi) {
        uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
        return lo + static_cast<int>(eng_() % span);
    }

    std::mt19937_64& engine() { return eng_; }

private:
    std::mt19937_64 eng_;
};

}  // namespace colform
