#pragma once

#include <cstdint>

namespace clvlab {

// 64-bit linear congruential generator, multiplier/increment from Knuth's
// MMIX. Chosen over <random> engines so that seeded runs produce identical
// streams on every platform and standard library.
class Lcg64 {
public:
    explicit Lcg64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ = state_ * 6364136223846793005ULL + 1442695040888963407ULL;
        return state_;
    }

    // Uniform in [0, 1), 53 random mantissa bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

private:
    std::uint64_t state_;
};

}  // namespace clvlab
