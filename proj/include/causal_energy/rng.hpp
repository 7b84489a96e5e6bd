#pragma once

// Portable PRNG so seeds reproduce across platforms and language ports.
//
//   splitmix64: state += 0x9E3779B97F4A7C15;
//               z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9;
//               z = (z ^ (z >> 27)) * 0x94D049BB133111EB;
//               return z ^ (z >> 31);
//   xoshiro256**: result = rotl(s1 * 5, 7) * 9, standard state update,
//                 state seeded by four successive splitmix64 outputs.
//   uniform(): (next() >> 11) * 2^-53, in [0, 1).
//   normal(): Box-Muller, sqrt(-2 ln(1 - u1)) * cos(2 pi u2); the sine
//             partner is cached and returned by the following call.

#include <cstdint>
#include <optional>
#include <string_view>

namespace ce {

class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    std::uint64_t next() noexcept {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t state_;
};

class Rng {
public:
    explicit Rng(std::uint64_t seed) noexcept;

    std::uint64_t next() noexcept;
    double uniform() noexcept;
    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
    double normal() noexcept;
    /// Unbiased integer in [0, bound) by rejection.
    std::uint64_t below(std::uint64_t bound) noexcept;

private:
    std::uint64_t s_[4];
    std::optional<double> spare_;
};

/// Stream splitting: derives an independent seed for a labelled sub-stream.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view label) noexcept;
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept;

}  // namespace ce
