#pragma once

#include <array>
#include <cstdint>

namespace qzeno {

namespace detail {

// splitmix64 step: advances `state` by the golden-ratio increment and returns
// a fully mixed 64-bit word.
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

} // namespace detail

// xoshiro256++ generator. Streams are derived from (master_seed, run_index)
// through splitmix64, so run r always sees the same sequence regardless of
// how runs are distributed over threads.
class RngStream {
public:
    RngStream() : state_{1, 2, 3, 4} {}

    static RngStream from_seed(std::uint64_t seed) { return for_run(seed, 0); }

    static RngStream for_run(std::uint64_t master_seed, std::uint64_t run_index) {
        std::uint64_t st = master_seed + 0x9E3779B97F4A7C15ULL * run_index;
        RngStream g;
        bool all_zero = true;
        for (auto& w : g.state_) {
            w = detail::splitmix64_next(st);
            all_zero = all_zero && w == 0;
        }
        if (all_zero) g.state_[0] = 0x9E3779B97F4A7C15ULL;
        return g;
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform double in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform double in [a, b).
    double uniform(double a, double b) { return a + uniform01() * (b - a); }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::array<std::uint64_t, 4> state_;
};

} // namespace qzeno
