#include "iifcn/tensor.hpp"

#include <numeric>
#include <sstream>
#include <stdexcept>

namespace iifcn {

std::string shape_str(const std::vector<int64_t>& shape) {
    std::ostringstream os;
    os << "(";
    for (size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ", ";
        os << shape[i];
    }
    os << ")";
    return os.str();
}

[[noreturn]] void throw_shape_error(const std::string& what) {
    throw std::invalid_argument("invalid shape: " + what);
}

static int64_t checked_numel(const std::vector<int64_t>& shape) {
    if (shape.empty() || shape.size() > 4)
        throw_shape_error("tensor rank must be 1..4, got " + shape_str(shape));
    int64_t n = 1;
    for (int64_t e : shape) {
        if (e < 1)
            throw_shape_error("all extents must be >= 1, got " + shape_str(shape));
        n *= e;
    }
    return n;
}

Tensor::Tensor(std::vector<int64_t> shape)
    : shape_(std::move(shape)), data_(static_cast<size_t>(checked_numel(shape_)), 0.0) {}

Tensor::Tensor(std::vector<int64_t> shape, std::vector<real> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (checked_numel(shape_) != static_cast<int64_t>(data_.size()))
        throw_shape_error("data length " + std::to_string(data_.size()) +
                          " does not match shape " + shape_str(shape_));
}

Tensor Tensor::full(std::vector<int64_t> shape, real value) {
    Tensor t(std::move(shape));
    t.fill(value);
    return t;
}

Tensor Tensor::zeros_like(const Tensor& t) {
    return Tensor(t.shape_);
}

void Tensor::fill(real value) {
    std::fill(data_.begin(), data_.end(), value);
}

} // namespace iifcn
