#pragma once

#include <cstdint>

namespace iifcn {

// splitmix64 generator. Standard-library distributions are not pinned across
// implementations, so everything random goes through this to keep runs
// reproducible bit for bit.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    // Independent substream for (seed, a, b, c), e.g. (seed, sample, epoch).
    static Rng stream(uint64_t seed, uint64_t a = 0, uint64_t b = 0, uint64_t c = 0);

    uint64_t next_u64();

    double uniform();                          // [0, 1)
    double uniform(double lo, double hi);      // [lo, hi)
    int64_t uniform_int(int64_t n);            // [0, n), n >= 1
    double normal();                           // standard normal, Box-Muller
    bool bernoulli(double p);

private:
    uint64_t state_;
};

uint64_t mix64(uint64_t x);

} // namespace iifcn
