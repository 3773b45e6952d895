#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace bseg {

// One splitmix64 output step; used to mix seeds and derive stream keys.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Deterministic PRNG used wherever the pipeline needs randomness.
///
/// Wraps std::mt19937_64, whose output sequence is fixed by the standard,
/// and generates doubles/integers with explicit algorithms so that no
/// implementation-defined <random> distribution is involved. Identical
/// seeds give identical draws on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

    /// Independent substream keyed by (seed, key...). Used to give each
    /// consumer / run / restart its own stream regardless of iteration order.
    static Rng stream(std::uint64_t seed, std::initializer_list<std::uint64_t> key) {
        std::uint64_t z = splitmix64(seed);
        for (std::uint64_t k : key) {
            z = splitmix64(z ^ splitmix64(k + 0x6a09e667f3bcc909ULL));
        }
        Rng r(0);
        r.engine_.seed(z);
        r.draws_ = 0;
        return r;
    }

    std::uint64_t next() {
        ++draws_;
        return engine_();
    }

    /// Uniform double in [0, 1) with 53-bit resolution.
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Uniform double in (0, hi]; never returns zero.
    double uniform_open0(double hi) {
        return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53 * hi;
    }

    /// Uniform integer in [0, n). Rejection sampling, no modulo bias.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t lim = (0 - n) % n;  // 2^64 mod n
        std::uint64_t r = next();
        while (r < lim) r = next();
        return r % n;
    }

    /// Number of raw draws consumed so far. A PAM run that never draws had
    /// no ties to break, so rotated-seed restarts would repeat it exactly.
    std::uint64_t draws() const { return draws_; }

private:
    std::mt19937_64 engine_;
    std::uint64_t draws_ = 0;
};

/// Rounding rule used for every "fraction of a count" in the pipeline.
inline long long round_half_up(double x) {
    return static_cast<long long>(std::floor(x + 0.5));
}

}  // namespace bseg
