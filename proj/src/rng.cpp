#include "iifcn/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace iifcn {

static constexpr uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

uint64_t mix64(uint64_t x) {
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

Rng Rng::stream(uint64_t seed, uint64_t a, uint64_t b, uint64_t c) {
    uint64_t s = mix64(seed + kGolden);
    s = mix64(s + kGolden + a);
    s = mix64(s + kGolden + b);
    s = mix64(s + kGolden + c);
    return Rng(s);
}

uint64_t Rng::next_u64() {
    state_ += kGolden;
    return mix64(state_);
}

double Rng::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform();
}

int64_t Rng::uniform_int(int64_t n) {
    if (n < 1) throw std::invalid_argument("uniform_int: n must be >= 1");
    // 64-bit multiply-shift; bias is negligible for the ranges used here.
    return static_cast<int64_t>((static_cast<__uint128_t>(next_u64()) *
                                 static_cast<__uint128_t>(n)) >> 64);
}

double Rng::normal() {
    double u1 = 1.0 - uniform(); // (0, 1]
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
}

bool Rng::bernoulli(double p) {
    return uniform() < p;
}

} // namespace iifcn
