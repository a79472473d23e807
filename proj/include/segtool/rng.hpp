#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace seg {

// SplitMix64 generator. All randomness in this project flows through this
// generator so that runs are reproducible bit-for-bit given the same seed,
// including across reimplementations. The exact update rule, the derived
// helpers below, and the sub-seed derivation are part of the model and
// dataset file contracts (see README, "Determinism").
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        state_ += 0x9E3779B97F4A7C15ull;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // Uniform integer in [0, n). Plain modulo; the bias is negligible for
    // the range sizes used here and the rule is trivial to restate.
    std::uint64_t next_below(std::uint64_t n) { return next() % n; }

    // Uniform double in [0, 1) with 53 random bits.
    double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Uniform double in [lo, hi).
    double next_range(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // Standard normal via Box-Muller. One value per draw of (u1, u2).
    double next_normal() {
        double u1 = next_double();
        while (u1 == 0.0) u1 = next_double();
        double u2 = next_double();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

private:
    std::uint64_t state_;
};

// FNV-1a over the label bytes.
inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ull;
    }
    return h;
}

// Stage sub-seed: root seed XOR the FNV-1a hash of the stage label, mixed
// through one SplitMix64 step. Stage labels are listed in the README.
inline std::uint64_t derive_seed(std::uint64_t root, std::string_view label) {
    Rng r(root ^ fnv1a64(label));
    return r.next();
}

} // namespace seg
