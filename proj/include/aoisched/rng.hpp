#pragma once

#include <cstdint>

namespace aoisched {

/**
Splittable pseudo-random stream (splitmix64 core).

Streams are fully determined by their seed, so two sources built from the
same seed produce bit-identical sequences on every platform. `derive(k)`
gives an independent child stream keyed on the parent seed and `k`, which
lets sweeps hand out per-cell streams without coordinating state. We draw
doubles ourselves instead of going through <random> distributions because
those are not bit-stable across standard library implementations.
*/
class RandomSource {
public:
    explicit RandomSource(std::uint64_t seed) : seed_(seed), state_(seed) {}

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ull;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double next_double() { return double(next_u64() >> 11) * 0x1.0p-53; }

    /// Bernoulli draw; p=1 always succeeds, p=0 never does.
    bool bernoulli(double p) { return next_double() < p; }

    /// Uniform integer in {0, .., n-1} via rejection sampling.
    std::uint64_t uniform_int(std::uint64_t n) {
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
        std::uint64_t v = next_u64();
        while (v >= limit) v = next_u64();
        return v % n;
    }

    /// Independent child stream; depends only on (seed, stream), not on
    /// how much of this stream has been consumed.
    RandomSource derive(std::uint64_t stream) const {
        std::uint64_t z = seed_ ^ (0x9e3779b97f4a7c15ull * (stream + 1));
        z = (z ^ (z >> 33)) * 0xff51afd7ed558ccdull;
        z = (z ^ (z >> 33)) * 0xc4ceb9fe1a85ec53ull;
        return RandomSource(z ^ (z >> 33));
    }

private:
    std::uint64_t seed_;
    std::uint64_t state_;
};

} // namespace aoisched
