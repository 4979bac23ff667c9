#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "iifcn/tensor.hpp"

namespace iifcn {

class Node;
using Var = std::shared_ptr<Node>;

// One recorded operation result. The graph is built dynamically; backward()
// replays it in reverse topological order. Gradients accumulate additively
// until an explicit zero_grad, so a parameter used twice collects both paths.
class Node {
public:
    Tensor value;
    Tensor grad; // allocated on first use, same shape as value
    std::vector<Var> inputs;
    std::function<void(Node&)> backward_fn;
    bool requires_grad = false;
    std::string name; // nonempty for parameters

    explicit Node(Tensor v) : value(std::move(v)) {}

    void ensure_grad() {
        if (grad.empty()) grad = Tensor::zeros_like(value);
    }
    void zero_grad() {
        if (!grad.empty()) grad.fill(0.0);
    }
};

Var constant(Tensor value);
Var parameter(Tensor value, std::string name);

// Extension point for ops with hand-derived backward passes (losses).
Var make_op(Tensor value, std::vector<Var> inputs, std::function<void(Node&)> backward_fn);

struct Padding {
    enum class Mode { valid, preserve, dilated };
    Mode mode = Mode::valid;
    int rate = 1;

    static Padding valid() { return {Mode::valid, 1}; }
    static Padding preserve() { return {Mode::preserve, 1}; }
    static Padding dilated(int rate) { return {Mode::dilated, rate}; }
};

// Cross-correlation. x: (N, Cin, H, W); kernel: (Cout, Cin, kh, kw);
// bias: (Cout) or null. valid shrinks by k-1 per axis, preserve and
// dilated keep the spatial size.
Var conv2d(const Var& x, const Var& kernel, const Var& bias, Padding pad);

// Adjoint of a stride-s valid convolution. x: (N, Cin, h, w);
// kernel: (Cin, Cout, kh, kw); output spatial size is s*(h-1)+k.
Var conv2d_transpose(const Var& x, const Var& kernel, int stride);

Var bias_add(const Var& x, const Var& bias); // per-channel
Var maxpool2(const Var& x);                  // 2x2 window, stride 2
Var concat_channels(const std::vector<Var>& xs);
Var slice_channels(const Var& x, int64_t from, int64_t count);
Var center_crop(const Var& x, int64_t target_h, int64_t target_w);
Var relu(const Var& x);
Var add(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var mul_scalar(const Var& x, real s);
Var sum(const Var& x); // scalar (1-element) result
Var softmax2(const Var& x); // channel pair per pixel, sums to 1

// Reverse-mode sweep from a scalar loss. Populates .grad of every
// reachable node with requires_grad set.
void backward(const Var& loss);

} // namespace iifcn
