#pragma once

#include <cstdint>

namespace qreg {

// splitmix64 finalizer. Fixed mixing constants; the output stream is part of
// the reproducibility contract and must never change between versions.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Minimal splittable PRNG (splitmix64). One instance per disorder
/// realization, seeded via realization_seed().
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform on [0, 1) with 53-bit resolution.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform on [lo, hi).
    double next_double(double lo, double hi) {
        return lo + (hi - lo) * next_double();
    }

private:
    std::uint64_t state_;
};

// Stream seed for realization r of an ensemble:
//   mix64(mix64(master_seed) ^ (0x9E3779B97F4A7C15 * (r + 1)))
// Distinct realizations get decorrelated starting states, so ensembles can be
// sampled in any order (or in parallel) with identical results.
inline std::uint64_t realization_seed(std::uint64_t master_seed,
                                      std::uint64_t realization_index) {
    return mix64(mix64(master_seed) ^
                 (0x9E3779B97F4A7C15ULL * (realization_index + 1)));
}

}  // namespace qreg
