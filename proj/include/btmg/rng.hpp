#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace btmg {

// splitmix64 step; used to whiten seed material before it reaches the engine.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d4a2c479e6f22dull;
    return z ^ (z >> 31);
}

// Derives an independent stream seed from a master seed plus up to three
// component indices (repetition, unit index, method slot).  Every derived
// value goes through splitmix64 so neighbouring inputs land far apart.
inline std::uint64_t mix_seed(std::uint64_t master, std::uint64_t a = 0,
                              std::uint64_t b = 0, std::uint64_t c = 0) {
    std::uint64_t s = master;
    std::uint64_t h = splitmix64(s);
    s ^= a + 0x9e3779b97f4a7c15ull;
    h ^= splitmix64(s);
    s ^= b + 0xd1b54a32d192ed03ull;
    h ^= splitmix64(s);
    s ^= c + 0x8cb92ba72f3d8dd7ull;
    h ^= splitmix64(s);
    return h;
}

// Deterministic random stream.  All draws are hand-rolled on top of the raw
// mt19937_64 output because the std distribution objects are allowed to
// differ between standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Uniform double in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Standard normal via Box-Muller (hand-rolled for the same reason).
    double normal() {
        const double u = 1.0 - uniform01();  // (0, 1]: keeps log(u) finite
        const double v = uniform01();
        return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * std::numbers::pi * v);
    }

    // Uniform integer in [0, n).  Rejection sampling keeps the result unbiased.
    std::uint64_t index(std::uint64_t n) {
        if (n == 0) return 0;
        const std::uint64_t limit = ~0ull - (~0ull % n);
        std::uint64_t draw;
        do {
            draw = engine_();
        } while (draw >= limit);
        return draw % n;
    }

    // In-place Fisher-Yates shuffle.
    template <class Vec>
    void shuffle(Vec& values) {
        for (std::size_t i = values.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(index(i));
            std::swap(values[i - 1], values[j]);
        }
    }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

}  // namespace btmg
