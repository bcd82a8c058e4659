#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace mixlab {

/// SplitMix64 finalizer; used to derive independent stream states.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// A reproducible random stream addressed by (root_seed, stream_index).
///
/// The generator state is a pure function of the address, so stream k is
/// reachable directly without drawing from streams 0..k-1. The engine is
/// xoshiro256** and satisfies UniformRandomBitGenerator. Bounded integers and
/// uniform reals are produced by fixed algorithms so outputs do not depend on
/// the standard library implementation.
class RngStream {
public:
    using result_type = std::uint64_t;

    RngStream(std::uint64_t root_seed, std::uint64_t stream_index) noexcept
        : root_seed_(root_seed), stream_index_(stream_index) {
        std::uint64_t s = key();
        for (auto& word : state_) {
            s = splitmix64(s);
            word = s;
        }
    }

    [[nodiscard]] std::uint64_t root_seed() const noexcept { return root_seed_; }
    [[nodiscard]] std::uint64_t stream_index() const noexcept { return stream_index_; }
    /// One 64-bit value identifying the address; seeds the engine state.
    [[nodiscard]] std::uint64_t key() const noexcept {
        return splitmix64(root_seed_ ^ splitmix64(stream_index_ + 0x632be59bd9b4e019ULL));
    }

    /// Child stream k of this stream's address; independent of draws made so far.
    [[nodiscard]] RngStream child(std::uint64_t k) const noexcept {
        return RngStream(splitmix64(root_seed_ ^ splitmix64(stream_index_)), k);
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform integer in [0, bound) by Lemire's multiply-shift rejection.
    std::uint64_t below(std::uint64_t bound) noexcept {
        std::uint64_t x = (*this)();
        __uint128_t product = static_cast<__uint128_t>(x) * bound;
        auto low = static_cast<std::uint64_t>(product);
        if (low < bound) {
            const std::uint64_t threshold = (0 - bound) % bound;
            while (low < threshold) {
                x = (*this)();
                product = static_cast<__uint128_t>(x) * bound;
                low = static_cast<std::uint64_t>(product);
            }
        }
        return static_cast<std::uint64_t>(product >> 64);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) noexcept { return uniform() < p; }

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t root_seed_;
    std::uint64_t stream_index_;
    std::array<std::uint64_t, 4> state_{};
};

}  // namespace mixlab
