#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace lakelab {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
/// Each (key, counter) pair maps to four independent 32-bit words, so any
/// path/step can be generated without sequential state.
class Philox4x32 {
public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    explicit Philox4x32(std::uint64_t seed)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

    Counter operator()(Counter ctr) const {
        Key k = key_;
        for (int round = 0; round < 10; ++round) {
            ctr = single_round(ctr, k);
            k[0] += kW0;
            k[1] += kW1;
        }
        return ctr;
    }

    /// Two standard normals for stream `stream` at position `index` (Box-Muller).
    std::array<double, 2> normal_pair(std::uint64_t stream, std::uint64_t index) const {
        const Counter out = (*this)({static_cast<std::uint32_t>(index),
                                     static_cast<std::uint32_t>(index >> 32),
                                     static_cast<std::uint32_t>(stream),
                                     static_cast<std::uint32_t>(stream >> 32)});
        const double u1 = to_open_unit(out[0], out[1]);
        const double u2 = to_open_unit(out[2], out[3]);
        const double rad = std::sqrt(-2.0 * std::log(u1));
        const double ang = 2.0 * std::numbers::pi * u2;
        return {rad * std::cos(ang), rad * std::sin(ang)};
    }

    /// Uniform in (0, 1) from 53 random bits.
    static double to_open_unit(std::uint32_t hi, std::uint32_t lo) {
        const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
        return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
    }

private:
    static constexpr std::uint32_t kM0 = 0xD2511F53, kM1 = 0xCD9E8D57;
    static constexpr std::uint32_t kW0 = 0x9E3779B9, kW1 = 0xBB67AE85;

    static Counter single_round(const Counter& c, const Key& k) {
        const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * c[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * c[2];
        return {static_cast<std::uint32_t>(p1 >> 32) ^ c[1] ^ k[0], static_cast<std::uint32_t>(p1),
                static_cast<std::uint32_t>(p0 >> 32) ^ c[3] ^ k[1], static_cast<std::uint32_t>(p0)};
    }

    Key key_;
};

}  // namespace lakelab
