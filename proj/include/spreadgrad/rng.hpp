#pragma once

#include <cstdint>
#include <limits>

namespace spreadgrad {

/// SplitMix64 bit generator. Cheap to construct, so independent streams can be
/// derived per (seed, index) without sharing state between workers.
class SplitMix64 {
public:
    using result_type = std::uint64_t;

    explicit SplitMix64(std::uint64_t seed = 0) : state_(seed) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t state_;
};

/// Deterministic child seed for stream `index` of `seed`.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index, std::uint64_t salt = 0) {
    SplitMix64 g(seed ^ (0xD1B54A32D192ED03ULL * (salt + 1)));
    std::uint64_t s = g();
    SplitMix64 h(s + 0x632BE59BD9B4E019ULL * (index + 1));
    return h();
}

}  // namespace spreadgrad
