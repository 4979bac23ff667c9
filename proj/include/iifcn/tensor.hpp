#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace iifcn {

using real = double;

std::string shape_str(const std::vector<int64_t>& shape);

// Dense row-major tensor with up to 4 axes, laid out as (N, C, H, W)
// when 4-dimensional. All network computation and gradients live here.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<int64_t> shape);
    Tensor(std::vector<int64_t> shape, std::vector<real> data);

    static Tensor full(std::vector<int64_t> shape, real value);
    static Tensor zeros_like(const Tensor& t);

    const std::vector<int64_t>& shape() const { return shape_; }
    int64_t ndim() const { return static_cast<int64_t>(shape_.size()); }
    int64_t numel() const { return static_cast<int64_t>(data_.size()); }
    bool empty() const { return data_.empty(); }
    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    // Extents of a 4-D tensor.
    int64_t n() const { return shape_[0]; }
    int64_t c() const { return shape_[1]; }
    int64_t h() const { return shape_[2]; }
    int64_t w() const { return shape_[3]; }

    real* data() { return data_.data(); }
    const real* data() const { return data_.data(); }

    real& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
    real operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

    real& at(int64_t n, int64_t c, int64_t y, int64_t x) {
        return data_[static_cast<size_t>(((n * shape_[1] + c) * shape_[2] + y) * shape_[3] + x)];
    }
    real at(int64_t n, int64_t c, int64_t y, int64_t x) const {
        return data_[static_cast<size_t>(((n * shape_[1] + c) * shape_[2] + y) * shape_[3] + x)];
    }

    void fill(real value);

private:
    std::vector<int64_t> shape_;
    std::vector<real> data_;
};

// Thrown as std::invalid_argument with a message naming the extents.
[[noreturn]] void throw_shape_error(const std::string& what);

} // namespace iifcn
