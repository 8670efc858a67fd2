#ifndef CSBP_RNG_HPP
#define CSBP_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>

namespace csbp {

/// A deterministic random source identified by (seed, stream_id). Streams
/// with distinct ids are decorrelated by hashing the pair through splitmix64
/// before seeding the underlying generator, so ensembles can hand one stream
/// to each path and stay reproducible under any thread count.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id)
        : seed_(seed), stream_id_(stream_id) {
        std::uint64_t s = mix(seed + 0x9e3779b97f4a7c15ull * (stream_id + 1));
        std::seed_seq seq{static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32),
                          static_cast<std::uint32_t>(mix(s)),
                          static_cast<std::uint32_t>(mix(s) >> 32)};
        gen_.seed(seq);
    }

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream_id() const noexcept { return stream_id_; }

    /// Uniform on (0, 1]: never returns 0, so -log is always finite.
    double uniform() {
        // 53-bit mantissa; map {0,...,2^53-1} -> ((0,1]]
        const std::uint64_t r = gen_() >> 11;
        return (static_cast<double>(r) + 1.0) * 0x1p-53;
    }

    /// Exponential variate by inversion (platform-independent).
    double exponential(double rate) { return -std::log(uniform()) / rate; }

    /// Standard normal by Box-Muller without caching: exactly two uniforms
    /// per draw, keeping streams reproducible regardless of call pattern.
    double normal() {
        const double u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(6.283185307179586476925286766559 * u2);
    }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        // rejection-free would bias for huge n; n here is tiny (atom counts)
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t r;
        do {
            r = gen_();
        } while (r >= limit);
        return r % n;
    }

private:
    static std::uint64_t mix(std::uint64_t z) noexcept {
        z += 0x9e3779b97f4a7c15ull;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::mt19937_64 gen_;
};

}  // namespace csbp

#endif  // CSBP_RNG_HPP
