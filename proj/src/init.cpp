#include "iifcn/init.hpp"

#include <cmath>

namespace iifcn {

Tensor he_normal(std::vector<int64_t> shape, int64_t fan_in, Rng& rng) {
    Tensor t(std::move(shape));
    const real stddev = std::sqrt(2.0 / static_cast<real>(fan_in));
    for (int64_t i = 0; i < t.numel(); ++i) t[i] = stddev * rng.normal();
    return t;
}

} // namespace iifcn
