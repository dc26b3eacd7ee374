#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace evidfuse {

// SplitMix64 (Steele, Lea, Flood 2014). One 64-bit word of state, splittable
// into independent substreams by hashing (seed, stream) pairs, which is what
// keeps per-view sample streams stable when views are added.
//
// All randomness in the project flows through this generator so that runs are
// byte-identical across platforms; std::<distribution> types are avoided on
// purpose (their output is implementation defined).
class SplitMix64 {
public:
    using result_type = std::uint64_t;

    explicit SplitMix64(std::uint64_t seed = 0) : state_(seed) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type{0}; }

    result_type operator()() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Derives an independent generator for (this seed, stream id).
    SplitMix64 substream(std::uint64_t stream) const {
        SplitMix64 mixer(state_ ^ (0x6a09e667f3bcc909ULL + stream));
        std::uint64_t derived = mixer();
        return SplitMix64(derived);
    }

    // Uniform double in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    // Uniform double in (0, 1].
    double uniform_pos() { return 1.0 - uniform(); }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Unbiased integer in [0, n) by rejection.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = max() - max() % n;
        std::uint64_t x;
        do {
            x = (*this)();
        } while (x >= limit);
        return x % n;
    }

    // Standard normal via Box-Muller; draws two uniforms per call.
    double normal() {
        const double u1 = uniform_pos();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

private:
    std::uint64_t state_;
};

// In-repo Fisher-Yates so shuffles do not depend on the standard library's
// unspecified std::shuffle algorithm.
template <typename T>
void fisher_yates(std::vector<T>& items, SplitMix64& rng) {
    for (std::size_t i = items.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.below(i));
        std::swap(items[i - 1], items[j]);
    }
}

} // namespace evidfuse
