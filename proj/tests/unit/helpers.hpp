#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "iifcn/autodiff.hpp"
#include "iifcn/rng.hpp"
#include "iifcn/tensor.hpp"

namespace testutil {

inline iifcn::Tensor rand_tensor(std::vector<int64_t> shape, iifcn::Rng& rng, double lo = -1.0,
                                 double hi = 1.0) {
    iifcn::Tensor t(std::move(shape));
    for (int64_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(lo, hi);
    return t;
}

// Relative error with a unit guard so near-zero pairs compare absolutely.
inline double rel_err(double a, double b) {
    double scale = std::max({std::fabs(a), std::fabs(b), 1.0});
    return std::fabs(a - b) / scale;
}

using GraphBuilder = std::function<iifcn::Var(const std::vector<iifcn::Var>&)>;

inline iifcn::Var rebuild(const std::vector<iifcn::Tensor>& vals, const GraphBuilder& build,
                          std::vector<iifcn::Var>* out_params = nullptr) {
    std::vector<iifcn::Var> ps;
    ps.reserve(vals.size());
    for (size_t i = 0; i < vals.size(); ++i)
        ps.push_back(iifcn::parameter(vals[i], "p" + std::to_string(i)));
    if (out_params) *out_params = ps;
    return build(ps);
}

// Checks every analytic gradient against a central difference computed on a
// freshly built graph. Returns the worst guarded relative error.
inline double max_grad_rel_err(const std::vector<iifcn::Tensor>& vals, const GraphBuilder& build,
                               double h = 1e-5) {
    std::vector<iifcn::Var> ps;
    iifcn::Var loss = rebuild(vals, build, &ps);
    iifcn::backward(loss);
    double worst = 0.0;
    for (size_t pi = 0; pi < vals.size(); ++pi) {
        const iifcn::Tensor& value = vals[pi];
        iifcn::Tensor analytic = ps[pi]->grad.empty() ? iifcn::Tensor::zeros_like(value)
                                                      : ps[pi]->grad;
        for (int64_t i = 0; i < value.numel(); ++i) {
            std::vector<iifcn::Tensor> plus = vals;
            std::vector<iifcn::Tensor> minus = vals;
            plus[pi][i] += h;
            minus[pi][i] -= h;
            double fp = rebuild(plus, build)->value[0];
            double fm = rebuild(minus, build)->value[0];
            double numeric = (fp - fm) / (2.0 * h);
            worst = std::max(worst, rel_err(analytic[i], numeric));
        }
    }
    return worst;
}

// Plain quadruple-loop cross-correlation with valid padding, used as an
// independent reference for the autodiff convolution.
inline iifcn::Tensor conv2d_valid_reference(const iifcn::Tensor& x, const iifcn::Tensor& k,
                                            const iifcn::Tensor* bias) {
    int64_t oh = x.h() - k.shape()[2] + 1;
    int64_t ow = x.w() - k.shape()[3] + 1;
    iifcn::Tensor out({x.n(), k.shape()[0], oh, ow});
    for (int64_t n = 0; n < x.n(); ++n)
        for (int64_t co = 0; co < k.shape()[0]; ++co)
            for (int64_t y = 0; y < oh; ++y)
                for (int64_t xx = 0; xx < ow; ++xx) {
                    double acc = bias ? (*bias)[co] : 0.0;
                    for (int64_t ci = 0; ci < x.c(); ++ci)
                        for (int64_t dy = 0; dy < k.shape()[2]; ++dy)
                            for (int64_t dx = 0; dx < k.shape()[3]; ++dx)
                                acc += x.at(n, ci, y + dy, xx + dx) * k.at(co, ci, dy, dx);
                    out.at(n, co, y, xx) = acc;
                }
    return out;
}

// Scatter-style reference for the transposed convolution: every input pixel
// stamps the kernel onto the output at stride spacing.
inline iifcn::Tensor conv2d_transpose_reference(const iifcn::Tensor& x, const iifcn::Tensor& k,
                                                int stride) {
    int64_t kh = k.shape()[2], kw = k.shape()[3];
    int64_t oh = stride * (x.h() - 1) + kh;
    int64_t ow = stride * (x.w() - 1) + kw;
    iifcn::Tensor out({x.n(), k.shape()[1], oh, ow});
    for (int64_t n = 0; n < x.n(); ++n)
        for (int64_t ci = 0; ci < x.c(); ++ci)
            for (int64_t y = 0; y < x.h(); ++y)
                for (int64_t xx = 0; xx < x.w(); ++xx) {
                    double v = x.at(n, ci, y, xx);
                    for (int64_t co = 0; co < k.shape()[1]; ++co)
                        for (int64_t dy = 0; dy < kh; ++dy)
                            for (int64_t dx = 0; dx < kw; ++dx)
                                out.at(n, co, y * stride + dy, xx * stride + dx) +=
                                    v * k.at(ci, co, dy, dx);
                }
    return out;
}

inline double max_abs_diff(const iifcn::Tensor& a, const iifcn::Tensor& b) {
    if (!a.same_shape(b)) return 1e30;
    double worst = 0.0;
    for (int64_t i = 0; i < a.numel(); ++i) worst = std::max(worst, std::fabs(a[i] - b[i]));
    return worst;
}

} // namespace testutil
