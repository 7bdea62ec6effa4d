#include "rng.hpp"

#include <cmath>

namespace scmgame::rng {

double Stream::next_gaussian() {
    double u1 = next_uniform01();
    double u2 = next_uniform01();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

std::uint64_t Stream::next_below(std::uint64_t n) {
    // Rejection-free modulo is fine here: n is always tiny relative to 2^64.
    return next_u64() % n;
}

}  // namespace scmgame::rng
