#ifndef SEQCAST_RNG_HPP
#define SEQCAST_RNG_HPP

#include <array>
#include <cstdint>

namespace seqcast {

/// Deterministic pseudo-random generator: xoshiro256++ seeded through
/// SplitMix64. The sequence depends only on the 64-bit seed, so draws are
/// identical across platforms and runs. All randomness in the library goes
/// through an explicitly passed Rng; there is no global generator.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();

    /// Uniform double in [0, 1) built from the top 53 bits of a draw.
    double next_double();

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi);

    /// Uniform integer in [0, n); n must be > 0.
    std::uint64_t next_below(std::uint64_t n);

    std::uint64_t seed() const noexcept { return seed_; }

private:
    std::uint64_t seed_;
    std::array<std::uint64_t, 4> state_;
};

/// SplitMix64 step; used for seeding and for deriving independent streams.
std::uint64_t splitmix64(std::uint64_t& state);

/// Stateless hash of up to three words into a fresh seed. Used to derive
/// per-sample random streams whose draws do not depend on processing order.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0);

} // namespace seqcast

#endif // SEQCAST_RNG_HPP
