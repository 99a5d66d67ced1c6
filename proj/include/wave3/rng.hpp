#pragma once

// Counter-based Philox4x32-10. A draw is a pure function of (key, counter), so
// any replica, time step or mode can be regenerated without replaying a
// stream, and results do not depend on thread scheduling.

#include <array>
#include <cmath>
#include <cstdint>

namespace wave3 {

class Philox4x32 {
public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static constexpr Counter round(Counter ctr, Key key) {
        for (int r = 0; r < 10; ++r) {
            if (r > 0) {
                key[0] += 0x9E3779B9u;
                key[1] += 0xBB67AE85u;
            }
            const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * ctr[0];
            const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * ctr[2];
            const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
            const auto lo0 = static_cast<std::uint32_t>(p0);
            const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
            const auto lo1 = static_cast<std::uint32_t>(p1);
            ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        }
        return ctr;
    }

    static constexpr Key key_from_seed(std::uint64_t seed) {
        return {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    }
};

/// Four standard normals per (seed, counter) via Box-Muller.
struct NormalQuad {
    double z[4];
};

inline double u32_to_open_unit(std::uint32_t v) { return (static_cast<double>(v) + 0.5) * 0x1.0p-32; }

inline NormalQuad philox_normals(std::uint64_t seed, const Philox4x32::Counter& ctr) {
    const auto r = Philox4x32::round(ctr, Philox4x32::key_from_seed(seed));
    NormalQuad q{};
    for (int i = 0; i < 2; ++i) {
        const double u1 = u32_to_open_unit(r[2 * i]);
        const double u2 = u32_to_open_unit(r[2 * i + 1]);
        const double rad = std::sqrt(-2.0 * std::log(u1));
        const double ang = 6.283185307179586476925 * u2;
        q.z[2 * i] = rad * std::cos(ang);
        q.z[2 * i + 1] = rad * std::sin(ang);
    }
    return q;
}

/// Sequential stream on top of the counter-based generator, for callers that
/// just want a sequence (calibration fields, Monte Carlo oracles).
class NormalStream {
public:
    NormalStream(std::uint64_t seed, std::uint32_t stream) : seed_(seed), stream_(stream) {}
    double next() {
        if (pos_ == 4) {
            buf_ = philox_normals(seed_, {counter_lo_, counter_hi_, stream_, 0x5EEDu});
            if (++counter_lo_ == 0) ++counter_hi_;
            pos_ = 0;
        }
        return buf_.z[pos_++];
    }
    double uniform() {
        const auto r = Philox4x32::round({counter_lo_, counter_hi_, stream_, 0xC0FFEEu}, Philox4x32::key_from_seed(seed_));
        if (++counter_lo_ == 0) ++counter_hi_;
        return u32_to_open_unit(r[0]);
    }

private:
    std::uint64_t seed_;
    std::uint32_t stream_;
    std::uint32_t counter_lo_ = 0;
    std::uint32_t counter_hi_ = 0;
    NormalQuad buf_{};
    int pos_ = 4;
};

}  // namespace wave3
