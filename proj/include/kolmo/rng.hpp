#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace kolmo {

// Philox-4x32-10 counter-based generator. Output depends only on
// (key, counter), so sample streams are reproducible under any parallel
// schedule.
namespace rng {

inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                               std::uint32_t k0, std::uint32_t k1) {
    constexpr std::uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
    constexpr std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = static_cast<std::uint64_t>(M0) * ctr[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(M1) * ctr[2];
        const std::array<std::uint32_t, 4> next = {
            static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ k0,
            static_cast<std::uint32_t>(p1),
            static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ k1,
            static_cast<std::uint32_t>(p0),
        };
        ctr = next;
        k0 += W0;
        k1 += W1;
    }
    return ctr;
}

inline double to_unit(std::uint32_t a, std::uint32_t b) {
    // 53 random bits -> [0, 1)
    const std::uint64_t m = (static_cast<std::uint64_t>(a >> 5) << 26) | (b >> 6);
    return static_cast<double>(m) * 0x1.0p-53;
}

// Two independent standard normals from the block addressed by
// (seed, idx0, idx1) via Box-Muller.
inline std::array<double, 2> normal_pair(std::uint64_t seed, std::uint64_t idx0,
                                         std::uint64_t idx1) {
    const std::array<std::uint32_t, 4> ctr = {
        static_cast<std::uint32_t>(idx0), static_cast<std::uint32_t>(idx0 >> 32),
        static_cast<std::uint32_t>(idx1), static_cast<std::uint32_t>(idx1 >> 32)};
    const auto r = philox4x32(ctr, static_cast<std::uint32_t>(seed),
                              static_cast<std::uint32_t>(seed >> 32));
    const double u1 = 1.0 - to_unit(r[0], r[1]); // (0, 1]
    const double u2 = to_unit(r[2], r[3]);
    const double rad = std::sqrt(-2.0 * std::log(u1));
    const double ang = 2.0 * std::numbers::pi * u2;
    return {rad * std::cos(ang), rad * std::sin(ang)};
}

} // namespace rng
} // namespace kolmo
