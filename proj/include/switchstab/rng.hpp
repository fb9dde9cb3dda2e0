#pragma once

#include <cmath>
#include <cstdint>

namespace switchstab {

/// PCG32 generator (XSH-RR output on a 64-bit LCG). Chosen for bit-exact
/// cross-platform sequences and cheap independent streams: each odd increment
/// selects a distinct sequence, so replica k of a run seeds as (seed, k).
class Pcg32 {
public:
    explicit Pcg32(std::uint64_t seed, std::uint64_t stream = 0)
        : state_(0), inc_((stream << 1u) | 1u) {
        next_u32();
        state_ += seed;
        next_u32();
    }

    std::uint32_t next_u32() {
        const std::uint64_t old = state_;
        state_ = old * 6364136223846793005ULL + inc_;
        const auto xorshifted = static_cast<std::uint32_t>(((old >> 18u) ^ old) >> 27u);
        const auto rot = static_cast<std::uint32_t>(old >> 59u);
        return (xorshifted >> rot) | (xorshifted << ((32u - rot) & 31u));
    }

    /// Uniform on (0, 1]; zero is excluded so logarithms stay finite.
    double uniform_unit() { return (static_cast<double>(next_u32()) + 1.0) * 0x1p-32; }

    /// Exponential(rate) by inverse CDF. The zero draw (u = 1) is rejected to
    /// keep sojourn times strictly positive.
    double exponential(double rate) {
        double x;
        do {
            x = -std::log(uniform_unit()) / rate;
        } while (!(x > 0.0));
        return x;
    }

private:
    std::uint64_t state_;
    std::uint64_t inc_;
};

}  // namespace switchstab
