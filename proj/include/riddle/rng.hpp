#pragma once

#include <cstdint>
#include <random>

namespace riddle {

// splitmix64, used only to expand (seed, stream_id) into well-separated
// mt19937_64 seeds so that parallel sub-streams are independent and
// reproducible.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Deterministic RNG: identical (seed, stream_id) gives an identical
// sequence on every platform.  The double mapping is pinned here instead
// of using std distributions, whose output is implementation-defined.
class Rng {
public:
    Rng(std::uint64_t seed, std::uint64_t stream_id) {
        std::uint64_t s = seed ^ (0x9e3779b97f4a7c15ULL * (stream_id + 1));
        std::uint64_t a = splitmix64(s);
        std::uint64_t b = splitmix64(s);
        std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                          static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
        engine_.seed(seq);
    }

    std::uint64_t next_u64() { return engine_(); }

    // uniform in [0, 1)
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // uniform in [lo, hi)
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

private:
    std::mt19937_64 engine_;
};

} // namespace riddle
