#pragma once

// Philox4x32-10 counter-based generator (Salmon et al., SC'11). Every
// (key, counter) pair maps to an independent block of four 32-bit words, so
// each particle owns a stream that does not depend on the thread schedule.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace rslv {

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

inline PhiloxCounter philox4x32_10(PhiloxCounter c, PhiloxKey k) {
    constexpr std::uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
    constexpr std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = static_cast<std::uint64_t>(M0) * c[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(M1) * c[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
        c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
        k[0] += W0;
        k[1] += W1;
    }
    return c;
}

/// Stream of one particle: key = seed, counter = (step lo, step hi, particle, purpose).
class ParticleRng {
public:
    ParticleRng(std::uint64_t seed, std::uint32_t particle)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)}, particle_(particle) {}

    PhiloxCounter block(std::uint64_t step, std::uint32_t purpose) const {
        return philox4x32_10({static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(step >> 32), particle_, purpose},
                             key_);
    }

    /// Two uniforms in (0, 1) with 53-bit resolution from one block.
    static std::array<double, 2> uniforms(const PhiloxCounter& b) {
        return {to_unit((static_cast<std::uint64_t>(b[0]) << 32) | b[1]),
                to_unit((static_cast<std::uint64_t>(b[2]) << 32) | b[3])};
    }

    /// Standard normal by Box-Muller from one block.
    static double normal(const PhiloxCounter& b) {
        const auto u = uniforms(b);
        return std::sqrt(-2.0 * std::log(u[0])) * std::cos(2.0 * std::numbers::pi * u[1]);
    }

private:
    // Midpoints of a 2^52 grid: strictly inside (0, 1) after rounding.
    static double to_unit(std::uint64_t v) { return (static_cast<double>(v >> 12) + 0.5) * 0x1.0p-52; }

    PhiloxKey key_;
    std::uint32_t particle_;
};

}  // namespace rslv
