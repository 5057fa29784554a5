#pragma once

// Counter-based random streams (Philox4x32-10).
//
// Every draw is a pure function of (seed, stream id, purpose, step, index),
// so replicas can be simulated in any order, serially or in parallel, and
// reproduce bit-identically. Coupled SGLD/diffusion runs share the kBrownian
// purpose; independent runs use distinct purposes.

#include <cstdint>
#include <cmath>
#include <array>

namespace langevin {

namespace detail {

struct PhiloxBlock {
    std::array<std::uint32_t, 4> x;
};

inline std::uint32_t mulhi32(std::uint32_t a, std::uint32_t b) {
    return static_cast<std::uint32_t>((std::uint64_t(a) * b) >> 32);
}

// Philox4x32-10 (Salmon et al. reference constants).
inline PhiloxBlock philox4x32(std::uint32_t k0, std::uint32_t k1,
                              std::uint32_t c0, std::uint32_t c1,
                              std::uint32_t c2, std::uint32_t c3) {
    constexpr std::uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
    constexpr std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        const std::uint32_t hi0 = mulhi32(M0, c0), lo0 = M0 * c0;
        const std::uint32_t hi1 = mulhi32(M1, c2), lo1 = M1 * c2;
        const std::uint32_t n0 = hi1 ^ c1 ^ k0, n1 = lo1;
        const std::uint32_t n2 = hi0 ^ c3 ^ k1, n3 = lo0;
        c0 = n0; c1 = n1; c2 = n2; c3 = n3;
        k0 += W0; k1 += W1;
    }
    return {{c0, c1, c2, c3}};
}

inline double u01_from_u32(std::uint32_t hi, std::uint32_t lo) {
    // 53 uniform bits in [0,1)
    const std::uint64_t bits = ((std::uint64_t(hi) << 32) | lo) >> 11;
    return double(bits) * 0x1.0p-53;
}

} // namespace detail

// Purpose tags keep draws of different roles statistically independent even
// at the same (replica, step) coordinates.
enum class RngPurpose : std::uint32_t {
    kBrownian = 1,   // shared Brownian increments (couples SGLD to diffusion)
    kSgldNoise = 2,  // SGLD-private Gaussian noise (uncoupled mode)
    kOracle = 3,     // stochastic gradient oracle (minibatch indices)
    kInit = 4,       // initial condition draws
    kGibbsSample = 5,
    kDataset = 6,
    kBootstrap = 7,
    kProbe = 8,
};

class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint32_t stream, RngPurpose purpose)
        : k0_(static_cast<std::uint32_t>(seed)),
          k1_(static_cast<std::uint32_t>(seed >> 32)),
          stream_(stream),
          purpose_(static_cast<std::uint32_t>(purpose)) {}

    // Uniform in [0,1), the idx-th draw of the given step.
    double uniform(std::uint64_t step, std::uint32_t idx) const {
        const auto b = block(step, 0x80000000u | idx);
        return detail::u01_from_u32(b.x[0], b.x[1]);
    }

    // Uniform index in {0,...,n-1} (unbiased to ~n/2^64).
    std::uint64_t uniform_index(std::uint64_t step, std::uint32_t idx,
                                std::uint64_t n) const {
        const auto b = block(step, 0x80000000u | idx);
        const std::uint64_t r = (std::uint64_t(b.x[0]) << 32) | b.x[1];
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(r) * n) >> 64);
    }

    // The g-th standard normal of the given step (g = 0,1,...). Consecutive
    // indices share Box-Muller pairs, so nothing is wasted for odd dimensions.
    double normal(std::uint64_t step, std::uint32_t g) const {
        const std::uint32_t pair = g >> 1;
        const auto b = block(step, pair);
        const double u1 = detail::u01_from_u32(b.x[0], b.x[1]);
        const double u2 = detail::u01_from_u32(b.x[2], b.x[3]);
        const double r = std::sqrt(-2.0 * std::log1p(-u1)); // u1<1 so 1-u1>0
        const double a = 6.283185307179586476925286766559 * u2;
        return (g & 1u) ? r * std::sin(a) : r * std::cos(a);
    }

    template <typename VecT>
    void fill_normal(std::uint64_t step, VecT& out) const {
        for (int i = 0; i < static_cast<int>(out.size()); ++i)
            out[i] = normal(step, static_cast<std::uint32_t>(i));
    }

private:
    detail::PhiloxBlock block(std::uint64_t step, std::uint32_t idx) const {
        return detail::philox4x32(k0_, k1_,
                                  static_cast<std::uint32_t>(step),
                                  static_cast<std::uint32_t>(step >> 32),
                                  stream_ ^ (purpose_ << 24),
                                  idx);
    }

    std::uint32_t k0_, k1_, stream_, purpose_;
};

} // namespace langevin
