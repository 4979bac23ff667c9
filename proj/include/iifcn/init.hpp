#pragma once

#include "iifcn/rng.hpp"
#include "iifcn/tensor.hpp"

namespace iifcn {

// Zero-mean normal with standard deviation sqrt(2 / fan_in), drawn in flat
// index order so a fixed seed gives bitwise identical parameters.
Tensor he_normal(std::vector<int64_t> shape, int64_t fan_in, Rng& rng);

} // namespace iifcn
