#pragma once

#include <cstdint>

namespace scmgame::rng {

// Counter-based generator: every draw is a pure function of its key, so
// ensembles can be generated in any order (or in parallel) without changing
// the stream. The mixer is the splitmix64 finalizer.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t key(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    std::uint64_t h = mix64(seed);
    h = mix64(h ^ a);
    h = mix64(h ^ b);
    h = mix64(h ^ c);
    return h;
}

// Uniform in [0, 1) with 53 random bits.
inline double uniform01(std::uint64_t bits) {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

inline double uniform(std::uint64_t bits, double lo, double hi) {
    return lo + (hi - lo) * uniform01(bits);
}

// Small sequential PRNG for places where a stream is more natural than a
// counter (shuffles, weight init, action sampling).
class Stream {
  public:
    explicit Stream(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t x = state_;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

    double next_uniform01() { return uniform01(next_u64()); }

    double next_uniform(double lo, double hi) { return uniform(next_u64(), lo, hi); }

    // Box-Muller; wastes the second value for simplicity.
    double next_gaussian();

    // Uniform integer in [0, n).
    std::uint64_t next_below(std::uint64_t n);

  private:
    std::uint64_t state_;
};

}  // namespace scmgame::rng
