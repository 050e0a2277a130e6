#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace streamrisk {

namespace detail {

// SplitMix64 finalizer; used to decorrelate seeds before they reach the generator.
constexpr std::uint64_t splitmix64(std::uint64_t& state) noexcept {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
}

}  // namespace detail

// xoshiro256** generator. One stream per replicate; never shared between threads.
// Satisfies UniformRandomBitGenerator so it can also drive <random> distributions.
class RandomStream {
public:
    using result_type = std::uint64_t;

    explicit RandomStream(std::uint64_t seed = 0) noexcept { reseed(seed); }

    // Substream for replicate `replicate` of experiment `experiment`. The triple is
    // folded through SplitMix64 so neighbouring indices give unrelated states.
    static RandomStream substream(std::uint64_t master_seed, std::uint64_t experiment,
                                  std::uint64_t replicate) noexcept {
        std::uint64_t h = master_seed;
        std::uint64_t key = detail::splitmix64(h);
        key ^= experiment * 0xd1b54a32d192ed03ULL;
        std::uint64_t h2 = key;
        key = detail::splitmix64(h2);
        key ^= replicate * 0x8cb92ba72f3d8dd7ULL;
        return RandomStream(key);
    }

    void reseed(std::uint64_t seed) noexcept {
        std::uint64_t sm = seed;
        for (auto& word : s_) word = detail::splitmix64(sm);
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept {
        const std::uint64_t result = detail::rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = detail::rotl(s_[3], 45);
        return result;
    }

    // Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    // Uniform on the open interval (0, 1); safe to feed into inverse CDFs.
    double uniform_open() noexcept {
        return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
    }

    friend bool operator==(const RandomStream&, const RandomStream&) = default;

private:
    std::array<std::uint64_t, 4> s_{};
};

}  // namespace streamrisk
