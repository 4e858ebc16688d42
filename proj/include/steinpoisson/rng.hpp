#pragma once

// Counter-based random number generation.
//
// Every random draw in this library is a pure function of
// (seed, replication, stream, draw index). Replications can therefore be
// evaluated in any order and on any number of threads while producing
// bit-identical results. The generator is Philox4x32-10 (Salmon et al.,
// "Parallel random numbers: as easy as 1, 2, 3", SC'11).

#include <array>
#include <cstdint>
#include <stdexcept>

#include <boost/math/special_functions/gamma.hpp>

namespace steinpoisson {

namespace detail {

inline void philox_mulhilo(std::uint32_t a, std::uint32_t b,
                           std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

} // namespace detail

/// One Philox4x32-10 block: 128-bit counter, 64-bit key -> 128 output bits.
inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                               std::array<std::uint32_t, 2> key) {
    constexpr std::uint32_t m0 = 0xD2511F53u, m1 = 0xCD9E8D57u;
    constexpr std::uint32_t w0 = 0x9E3779B9u, w1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        detail::philox_mulhilo(m0, ctr[0], hi0, lo0);
        detail::philox_mulhilo(m1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += w0;
        key[1] += w1;
    }
    return ctr;
}

/// Stream identifiers: one sub-stream per independent purpose within a
/// replication, so adding draws to one purpose never perturbs another.
enum class Stream : std::uint32_t {
    Points = 0,      // Poisson count + point proposals
    InnerZ = 1,      // z-samples for <DF, -DL^{-1}F>
    Phi2Z = 2,       // z-samples for the phi_2 integral
    Quadrature = 16, // Monte Carlo quadrature over the state space
};

/// A deterministic stream of uniforms addressed by
/// (seed, replication, stream, index).
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t replication, Stream stream)
        : key_{static_cast<std::uint32_t>(seed),
               static_cast<std::uint32_t>(seed >> 32)},
          rep_lo_(static_cast<std::uint32_t>(replication)),
          rep_hi_(static_cast<std::uint32_t>(replication >> 32)),
          stream_(static_cast<std::uint32_t>(stream)) {}

    std::uint64_t next_u64() { return u64_at(index_++); }

    /// Uniform in [0,1) with 53 random bits.
    double next_unit() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Random draw addressed directly by index (stateless access).
    std::uint64_t u64_at(std::uint64_t index) const {
        const std::uint64_t block = index >> 1;
        const auto out = philox4x32(
            {static_cast<std::uint32_t>(block),
             static_cast<std::uint32_t>(block >> 32) ^ rep_hi_,
             rep_lo_, stream_},
            key_);
        const unsigned half = static_cast<unsigned>(index & 1) * 2;
        return (static_cast<std::uint64_t>(out[half]) << 32) | out[half + 1];
    }

    std::uint64_t index() const { return index_; }

private:
    std::array<std::uint32_t, 2> key_;
    std::uint32_t rep_lo_, rep_hi_, stream_;
    std::uint64_t index_ = 0;
};

/// Smallest k with P(Poisson(lambda) <= k) >= u, via the incomplete-gamma
/// identity P(N <= k) = Q(k+1, lambda). Inversion from a single uniform
/// keeps counts comonotone across intensities sharing a draw.
inline long long poisson_quantile(double lambda, double u) {
    if (!(lambda > 0.0)) throw std::invalid_argument("poisson_quantile: lambda must be > 0");
    if (u <= 0.0) return 0;
    auto cdf = [lambda](long long k) {
        return boost::math::gamma_q(static_cast<double>(k) + 1.0, lambda);
    };
    long long lo = 0;
    long long hi = static_cast<long long>(lambda + 12.0 * std::sqrt(lambda) + 30.0);
    if (cdf(lo) >= u) return 0;
    while (cdf(hi) < u) {
        lo = hi;
        hi *= 2;
    }
    while (hi - lo > 1) {
        const long long mid = lo + (hi - lo) / 2;
        if (cdf(mid) >= u)
            hi = mid;
        else
            lo = mid;
    }
    return hi;
}

} // namespace steinpoisson
