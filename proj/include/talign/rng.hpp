#pragma once

#include <cstdint>

namespace talign {

// SplitMix64 step; used to expand user seeds into generator state and to
// derive independent per-frame seeds.
std::uint64_t splitmix64(std::uint64_t x);

// Derive a child seed from a parent seed and a stream index.
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t stream);

/// xorshift64* generator with a Box-Muller normal sampler.
///
/// The exact sequence is part of the public contract so that noise fields are
/// reproducible across implementations:
///   state0  = splitmix64(seed), replaced by 0x9E3779B97F4A7C15 if zero
///   next()  : x ^= x >> 12; x ^= x << 25; x ^= x >> 27; return x * 0x2545F4914F6CDD1D
///   uniform = (next() >> 11) * 2^-53                       in [0, 1)
///   normal  : u1 = 1 - uniform(), u2 = uniform(),
///             r = sqrt(-2 ln u1), emits r cos(2 pi u2) then r sin(2 pi u2)
class Xorshift64Star {
public:
    explicit Xorshift64Star(std::uint64_t seed);

    std::uint64_t next();
    double uniform();
    double normal();

private:
    std::uint64_t state_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

}  // namespace talign
