#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <numbers>

namespace pvb::rng {

inline std::uint64_t mix64(std::uint64_t z) noexcept
{
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Counter-based stream: the i-th draw is a pure function of (key, i), and the
/// key is a pure function of the seed and the path of substream ids. Replicate
/// r of a bootstrap always sees the same numbers regardless of scheduling.
class Stream {
public:
    explicit Stream(std::uint64_t seed) noexcept : key_(mix64(seed ^ 0x5851F42D4C957F2DULL)) {}

    Stream(std::uint64_t seed, std::initializer_list<std::uint64_t> path) noexcept : Stream(seed)
    {
        for (auto id : path) key_ = derive(key_, id);
    }

    Stream substream(std::uint64_t id) const noexcept
    {
        Stream s(*this);
        s.key_ = derive(key_, id);
        s.counter_ = 0;
        return s;
    }

    std::uint64_t next() noexcept
    {
        ++counter_;
        return mix64(key_ + counter_ * 0x9E3779B97F4A7C15ULL);
    }

    /// Uniform on the open interval (0, 1).
    double uniform() noexcept
    {
        return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
    }

    double normal() noexcept
    {
        double u1 = uniform();
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    bool bernoulli(double p) noexcept { return uniform() < p; }

    /// Uniform integer in [0, n).
    std::size_t below(std::size_t n) noexcept
    {
        const std::uint64_t bound = static_cast<std::uint64_t>(n);
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t v;
        do {
            v = next();
        } while (v >= limit);
        return static_cast<std::size_t>(v % bound);
    }

    std::uint64_t key() const noexcept { return key_; }

private:
    static std::uint64_t derive(std::uint64_t key, std::uint64_t id) noexcept
    {
        return mix64(key ^ mix64(id + 0xD1B54A32D192ED03ULL));
    }

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace pvb::rng
