#pragma once

#include <cstdint>
#include <initializer_list>

namespace lrsm {

// xoshiro256++ with splitmix64 seeding.  All stochastic operations in this
// library take an explicit 64-bit seed; independent substreams are derived
// with Rng::derive so that parallel generation (per replicate column, per
// bootstrap iteration, per posterior draw) is deterministic regardless of
// thread schedule.
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t x = seed;
        for (auto& w : s_) w = splitmix64(x);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform on (0,1); never returns an exact 0 or 1.
    double uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via the inverse CDF (see special.hpp); defined in
    // special.cpp to avoid a circular include.
    double normal();

    // Derives a child seed from a parent seed and a tag path.
    static std::uint64_t derive(std::uint64_t seed,
                                std::initializer_list<std::uint64_t> tags) {
        std::uint64_t x = seed;
        for (std::uint64_t t : tags) {
            x ^= 0x9e3779b97f4a7c15ULL + t;
            x = splitmix64(x);
        }
        return x;
    }

private:
    static std::uint64_t splitmix64(std::uint64_t& x) {
        std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    static std::uint64_t rotl(std::uint64_t v, int k) {
        return (v << k) | (v >> (64 - k));
    }

    std::uint64_t s_[4];
};

}  // namespace lrsm
