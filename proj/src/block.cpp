#include "iifcn/block.hpp"

#include <array>
#include <stdexcept>

#include "iifcn/init.hpp"

namespace iifcn {

namespace {

// Kernel sizes per branch stack. The first conv of a stack maps
// in_channels -> branch_channels, the rest stay at branch_channels.
using Stack = std::vector<int64_t>;

const std::array<Stack, 4>& branch_stacks(BlockSpec::Direction d) {
    static const std::array<Stack, 4> fwd = {Stack{5}, Stack{3, 3}, Stack{1, 5}, Stack{1, 3, 3}};
    static const std::array<Stack, 4> rev = {Stack{5}, Stack{3, 3}, Stack{5, 1}, Stack{3, 3, 1}};
    return d == BlockSpec::Direction::forward ? fwd : rev;
}

ConvParams make_conv(int64_t cin, int64_t cout, int64_t k, bool transpose, int64_t stride,
                     const std::string& name, Rng& rng, std::vector<Var>& out) {
    // Transpose kernels are stored (Cin, Cout, kh, kw); forward ones (Cout, Cin, kh, kw).
    std::vector<int64_t> shape = transpose ? std::vector<int64_t>{cin, cout, k, k}
                                           : std::vector<int64_t>{cout, cin, k, k};
    int64_t fan_in = transpose ? cin * k * k / (stride * stride) : cin * k * k;
    ConvParams cp;
    cp.kernel = parameter(he_normal(shape, fan_in, rng), name + ".kernel");
    cp.bias = parameter(Tensor::full({cout}, 0.0), name + ".bias");
    out.push_back(cp.kernel);
    out.push_back(cp.bias);
    return cp;
}

} // namespace

void BlockSpec::validate() const {
    if (in_channels < 1 || branch_channels < 1 || out_channels < 1)
        throw std::invalid_argument("block spec: channel counts must be positive");
}

BlockParams make_block_params(const BlockSpec& spec, const std::string& prefix, Rng& rng,
                              std::vector<Var>& out) {
    spec.validate();
    const bool rev = spec.direction == BlockSpec::Direction::reversed;
    BlockParams p;
    if (rev)
        p.up = make_conv(spec.in_channels, spec.in_channels, 2, true, 2, prefix + ".up", rng, out);
    const auto& stacks = branch_stacks(spec.direction);
    for (size_t b = 0; b < stacks.size(); ++b) {
        std::vector<ConvParams> stack;
        for (size_t i = 0; i < stacks[b].size(); ++i) {
            int64_t cin = i == 0 ? spec.in_channels : spec.branch_channels;
            std::string name =
                prefix + ".b" + std::to_string(b + 1) + ".c" + std::to_string(i + 1);
            stack.push_back(
                make_conv(cin, spec.branch_channels, stacks[b][i], rev, 1, name, rng, out));
        }
        p.branches.push_back(std::move(stack));
    }
    int64_t fuse_k = rev ? 1 : 2;
    p.fusion =
        make_conv(spec.fused_channels(), spec.out_channels, fuse_k, false, 1, prefix + ".fuse",
                  rng, out);
    return p;
}

int64_t block_param_count(const BlockSpec& spec) {
    spec.validate();
    const bool rev = spec.direction == BlockSpec::Direction::reversed;
    int64_t n = 0;
    if (rev) n += spec.in_channels * spec.in_channels * 4 + spec.in_channels;
    for (const auto& stack : branch_stacks(spec.direction)) {
        for (size_t i = 0; i < stack.size(); ++i) {
            int64_t cin = i == 0 ? spec.in_channels : spec.branch_channels;
            n += cin * spec.branch_channels * stack[i] * stack[i] + spec.branch_channels;
        }
    }
    int64_t fuse_k = rev ? 1 : 2;
    n += spec.fused_channels() * spec.out_channels * fuse_k * fuse_k + spec.out_channels;
    return n;
}

BlockShape block_shape(BlockSpec::Direction direction, int64_t h, int64_t w) {
    BlockShape s;
    if (direction == BlockSpec::Direction::forward) {
        s.admissible = h > 4 && w > 4 && (h - 4) % 2 == 0 && (w - 4) % 2 == 0;
        if (s.admissible) {
            s.h = (h - 4) / 2;
            s.w = (w - 4) / 2;
        }
    } else {
        s.admissible = h >= 1 && w >= 1;
        if (s.admissible) {
            s.h = 2 * h + 4;
            s.w = 2 * w + 4;
        }
    }
    return s;
}

Var forward_block(const Var& x, const BlockSpec& spec, const BlockParams& params,
                  Var* fusion_out) {
    spec.validate();
    if (spec.direction != BlockSpec::Direction::forward)
        throw std::invalid_argument("forward_block: spec direction is reversed");
    if (!x || x->value.ndim() != 4 || x->value.c() != spec.in_channels)
        throw std::invalid_argument("forward_block: input must be (N, in_channels, H, W)");
    BlockShape bs = block_shape(spec.direction, x->value.h(), x->value.w());
    if (!bs.admissible)
        throw std::invalid_argument("forward_block: spatial size " +
                                    std::to_string(x->value.h()) + "x" +
                                    std::to_string(x->value.w()) +
                                    " does not leave an even positive extent after the branches");
    std::vector<Var> outs;
    for (const auto& stack : params.branches) {
        Var y = x;
        for (const auto& cp : stack) y = relu(conv2d(y, cp.kernel, cp.bias, Padding::valid()));
        outs.push_back(y);
    }
    Var fused = relu(conv2d(concat_channels(outs), params.fusion.kernel, params.fusion.bias,
                            Padding::preserve()));
    if (fusion_out) *fusion_out = fused;
    return maxpool2(fused);
}

Var reversed_block(const Var& x, const BlockSpec& spec, const BlockParams& params,
                   const Var& bridge) {
    spec.validate();
    if (spec.direction != BlockSpec::Direction::reversed)
        throw std::invalid_argument("reversed_block: spec direction is forward");
    if (!x || x->value.ndim() != 4 || x->value.c() != spec.in_channels)
        throw std::invalid_argument("reversed_block: input must be (N, in_channels, H, W)");
    Var y = relu(bias_add(conv2d_transpose(x, params.up.kernel, 2), params.up.bias));
    if (bridge) y = add(y, bridge);
    std::vector<Var> outs;
    for (const auto& stack : params.branches) {
        Var z = y;
        for (const auto& cp : stack)
            z = relu(bias_add(conv2d_transpose(z, cp.kernel, 1), cp.bias));
        outs.push_back(z);
    }
    return relu(conv2d(concat_channels(outs), params.fusion.kernel, params.fusion.bias,
                       Padding::valid()));
}

} // namespace iifcn
