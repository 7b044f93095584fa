#pragma once

// Counter-based random numbers.
//
// Every random quantity in the toolkit is a pure function of
// (seed, stream, index, lane). Nothing carries hidden state between calls,
// so results never depend on how work is split between threads.

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <vector>

namespace cm4d::rng {

enum class Stream : std::uint64_t {
    symbols = 1,
    noise = 2,
    info_bits = 3,
    labeling = 4,
    interleaver = 5,
    code = 6,
    frame = 7,
    packing = 8,
};

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t hash(std::uint64_t seed, Stream stream, std::uint64_t index,
                             std::uint64_t lane = 0) noexcept
{
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ static_cast<std::uint64_t>(stream));
    h = splitmix64(h ^ index);
    return splitmix64(h ^ (lane * 0xd6e8feb86659fd93ULL));
}

/// Maps 64 random bits to the open interval (0, 1).
constexpr double to_open_unit(std::uint64_t bits) noexcept
{
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

constexpr double uniform(std::uint64_t seed, Stream stream, std::uint64_t index,
                         std::uint64_t lane = 0) noexcept
{
    return to_open_unit(hash(seed, stream, index, lane));
}

/// Two independent standard normals by the Box-Muller transform. This is the
/// only Gaussian sampler in the toolkit; golden outputs depend on it.
inline std::array<double, 2> gaussian_pair(std::uint64_t seed, Stream stream,
                                           std::uint64_t index, std::uint64_t pair)
{
    const double u1 = uniform(seed, stream, index, 2 * pair);
    const double u2 = uniform(seed, stream, index, 2 * pair + 1);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(theta), r * std::sin(theta)};
}

/// Unbiased integer in [0, bound) from a counter position.
inline std::uint64_t uniform_index(std::uint64_t seed, Stream stream, std::uint64_t index,
                                   std::uint64_t bound)
{
    // Rejection on the top bits; the lane advances on each rejection.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    for (std::uint64_t lane = 0;; ++lane) {
        const std::uint64_t x = hash(seed, stream, index, lane);
        if (x < limit)
            return x % bound;
    }
}

/// Sequential generator for construction-time randomness (code graphs,
/// permutations). Satisfies UniformRandomBitGenerator.
class SplitMix {
public:
    using result_type = std::uint64_t;

    explicit SplitMix(std::uint64_t seed, Stream stream = Stream::code)
        : state_(splitmix64(seed ^ (static_cast<std::uint64_t>(stream) << 56)))
    {
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return UINT64_MAX; }

    result_type operator()() noexcept
    {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t below(std::uint64_t bound)
    {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        for (;;) {
            const std::uint64_t x = (*this)();
            if (x < limit)
                return x % bound;
        }
    }

    double unit() { return to_open_unit((*this)()); }

    double normal()
    {
        const double u1 = unit();
        const double u2 = unit();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    // Fisher-Yates with our own index draws; std::shuffle is not portable
    // across standard libraries.
    template <typename T>
    void shuffle(std::vector<T>& v)
    {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t state_;
};

inline std::vector<std::size_t> random_permutation(std::size_t n, SplitMix& gen)
{
    std::vector<std::size_t> p(n);
    for (std::size_t i = 0; i < n; ++i)
        p[i] = i;
    gen.shuffle(p);
    return p;
}

} // namespace cm4d::rng
