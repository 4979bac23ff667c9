#include "iifcn/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

#include "iifcn/parallel.hpp"

namespace iifcn {

Var constant(Tensor value) {
    return std::make_shared<Node>(std::move(value));
}

Var parameter(Tensor value, std::string name) {
    auto node = std::make_shared<Node>(std::move(value));
    node->requires_grad = true;
    node->name = std::move(name);
    return node;
}

Var make_op(Tensor value, std::vector<Var> inputs, std::function<void(Node&)> backward_fn) {
    auto node = std::make_shared<Node>(std::move(value));
    node->inputs = std::move(inputs);
    node->backward_fn = std::move(backward_fn);
    for (const auto& in : node->inputs)
        if (in->requires_grad) node->requires_grad = true;
    return node;
}

namespace {

void require_4d(const Tensor& t, const char* what) {
    if (t.ndim() != 4)
        throw_shape_error(std::string(what) + " must be 4-D, got " + shape_str(t.shape()));
}

struct PadSpec {
    int64_t top = 0, bottom = 0, left = 0, right = 0;
    int64_t rate = 1;
    bool any() const { return top || bottom || left || right; }
};

PadSpec resolve_padding(Padding pad, int64_t kh, int64_t kw, int64_t h, int64_t w) {
    PadSpec p;
    switch (pad.mode) {
    case Padding::Mode::valid:
        if (kh > h || kw > w)
            throw_shape_error("valid conv kernel (" + std::to_string(kh) + "x" + std::to_string(kw) +
                              ") exceeds input (" + std::to_string(h) + "x" + std::to_string(w) + ")");
        break;
    case Padding::Mode::preserve:
        // total k-1 per axis; even kernels take the extra row/column at
        // bottom/right, odd kernels pad symmetrically
        p.top = (kh - 1) / 2;
        p.bottom = (kh - 1) - p.top;
        p.left = (kw - 1) / 2;
        p.right = (kw - 1) - p.left;
        break;
    case Padding::Mode::dilated:
        if (pad.rate < 1)
            throw std::invalid_argument("dilated conv: rate must be >= 1, got " + std::to_string(pad.rate));
        if (kh % 2 == 0 || kw % 2 == 0)
            throw_shape_error("dilated conv requires odd kernel extents, got " + std::to_string(kh) +
                              "x" + std::to_string(kw));
        p.rate = pad.rate;
        p.top = p.bottom = p.rate * (kh - 1) / 2;
        p.left = p.right = p.rate * (kw - 1) / 2;
        break;
    }
    return p;
}

Tensor pad_zero(const Tensor& x, const PadSpec& p) {
    const int64_t n = x.n(), c = x.c(), h = x.h(), w = x.w();
    const int64_t hp = h + p.top + p.bottom, wp = w + p.left + p.right;
    Tensor out({n, c, hp, wp});
    for (int64_t plane = 0; plane < n * c; ++plane) {
        const real* src = x.data() + plane * h * w;
        real* dst = out.data() + plane * hp * wp + p.top * wp + p.left;
        for (int64_t y = 0; y < h; ++y)
            std::copy(src + y * w, src + (y + 1) * w, dst + y * wp);
    }
    return out;
}

// out[n,co,y,x] = bias[co] + sum_{ci,i,j} xp[n,ci,y+i*r,x+j*r] * k[co,ci,i,j]
void conv_core_fwd(const Tensor& xp, const Tensor& k, const real* bias, int64_t rate, Tensor& out) {
    const int64_t ci_n = xp.c(), hp = xp.h(), wp = xp.w();
    const int64_t co_n = out.c(), oh = out.h(), ow = out.w();
    const int64_t kh = k.h(), kw = k.w();
    parallel_for(out.n() * co_n, [&](int64_t begin, int64_t end) {
        for (int64_t idx = begin; idx < end; ++idx) {
            const int64_t n = idx / co_n, co = idx % co_n;
            real* op = out.data() + idx * oh * ow;
            std::fill(op, op + oh * ow, bias ? bias[co] : 0.0);
            for (int64_t ci = 0; ci < ci_n; ++ci) {
                const real* ip = xp.data() + (n * ci_n + ci) * hp * wp;
                const real* kp = k.data() + (co * ci_n + ci) * kh * kw;
                for (int64_t i = 0; i < kh; ++i) {
                    for (int64_t j = 0; j < kw; ++j) {
                        const real kv = kp[i * kw + j];
                        if (kv == 0.0) continue;
                        for (int64_t y = 0; y < oh; ++y) {
                            const real* src = ip + (y + i * rate) * wp + j * rate;
                            real* dst = op + y * ow;
                            for (int64_t x = 0; x < ow; ++x) dst[x] += kv * src[x];
                        }
                    }
                }
            }
        }
    });
}

// dxp[n,ci,y+i*r,x+j*r] += k[co,ci,i,j] * gout[n,co,y,x]
void conv_core_bwd_input(const Tensor& gout, const Tensor& k, int64_t rate, Tensor& dxp) {
    const int64_t ci_n = dxp.c(), hp = dxp.h(), wp = dxp.w();
    const int64_t co_n = gout.c(), oh = gout.h(), ow = gout.w();
    const int64_t kh = k.h(), kw = k.w();
    parallel_for(dxp.n() * ci_n, [&](int64_t begin, int64_t end) {
        for (int64_t idx = begin; idx < end; ++idx) {
            const int64_t n = idx / ci_n, ci = idx % ci_n;
            real* gxp = dxp.data() + idx * hp * wp;
            for (int64_t co = 0; co < co_n; ++co) {
                const real* gop = gout.data() + (n * co_n + co) * oh * ow;
                const real* kp = k.data() + (co * ci_n + ci) * kh * kw;
                for (int64_t i = 0; i < kh; ++i) {
                    for (int64_t j = 0; j < kw; ++j) {
                        const real kv = kp[i * kw + j];
                        if (kv == 0.0) continue;
                        for (int64_t y = 0; y < oh; ++y) {
                            real* dst = gxp + (y + i * rate) * wp + j * rate;
                            const real* src = gop + y * ow;
                            for (int64_t x = 0; x < ow; ++x) dst[x] += kv * src[x];
                        }
                    }
                }
            }
        }
    });
}

// dk[co,ci,i,j] += sum_{n,y,x} gout[n,co,y,x] * xp[n,ci,y+i*r,x+j*r]
void conv_core_bwd_kernel(const Tensor& gout, const Tensor& xp, int64_t rate, Tensor& dk) {
    const int64_t n_n = xp.n(), ci_n = xp.c(), hp = xp.h(), wp = xp.w();
    const int64_t co_n = gout.c(), oh = gout.h(), ow = gout.w();
    const int64_t kh = dk.h(), kw = dk.w();
    parallel_for(co_n, [&](int64_t begin, int64_t end) {
        for (int64_t co = begin; co < end; ++co) {
            for (int64_t ci = 0; ci < ci_n; ++ci) {
                real* kp = dk.data() + (co * ci_n + ci) * kh * kw;
                for (int64_t i = 0; i < kh; ++i) {
                    for (int64_t j = 0; j < kw; ++j) {
                        real acc = 0.0;
                        for (int64_t n = 0; n < n_n; ++n) {
                            const real* gop = gout.data() + (n * co_n + co) * oh * ow;
                            const real* ip = xp.data() + (n * ci_n + ci) * hp * wp;
                            for (int64_t y = 0; y < oh; ++y) {
                                const real* src = ip + (y + i * rate) * wp + j * rate;
                                const real* g = gop + y * ow;
                                for (int64_t x = 0; x < ow; ++x) acc += g[x] * src[x];
                            }
                        }
                        kp[i * kw + j] += acc;
                    }
                }
            }
        }
    });
}

void add_interior(const Tensor& src_padded, const PadSpec& p, Tensor& dst) {
    const int64_t h = dst.h(), w = dst.w();
    const int64_t hp = src_padded.h(), wp = src_padded.w();
    for (int64_t plane = 0; plane < dst.n() * dst.c(); ++plane) {
        const real* src = src_padded.data() + plane * hp * wp + p.top * wp + p.left;
        real* out = dst.data() + plane * h * w;
        for (int64_t y = 0; y < h; ++y)
            for (int64_t x = 0; x < w; ++x) out[y * w + x] += src[y * wp + x];
    }
}

} // namespace

Var conv2d(const Var& x, const Var& kernel, const Var& bias, Padding pad) {
    require_4d(x->value, "conv2d input");
    require_4d(kernel->value, "conv2d kernel");
    const Tensor& xv = x->value;
    const Tensor& kv = kernel->value;
    if (kv.c() != xv.c())
        throw_shape_error("conv2d: kernel expects " + std::to_string(kv.c()) +
                          " input channels, input has " + std::to_string(xv.c()));
    if (bias && bias->value.numel() != kv.n())
        throw_shape_error("conv2d: bias has " + std::to_string(bias->value.numel()) +
                          " entries for " + std::to_string(kv.n()) + " output channels");

    const PadSpec p = resolve_padding(pad, kv.h(), kv.w(), xv.h(), xv.w());
    const bool padded = p.any();
    Tensor xp = padded ? pad_zero(xv, p) : Tensor();
    const Tensor& xin = padded ? xp : xv;

    const int64_t oh = xin.h() - (kv.h() - 1) * p.rate;
    const int64_t ow = xin.w() - (kv.w() - 1) * p.rate;
    Tensor out({xv.n(), kv.n(), oh, ow});
    conv_core_fwd(xin, kv, bias ? bias->value.data() : nullptr, p.rate, out);

    std::vector<Var> inputs = {x, kernel};
    if (bias) inputs.push_back(bias);
    return make_op(std::move(out), std::move(inputs),
                   [p, padded, xp = std::move(xp)](Node& node) {
                       const Var& x = node.inputs[0];
                       const Var& k = node.inputs[1];
                       const Tensor& xin = padded ? xp : x->value;
                       if (x->requires_grad) {
                           x->ensure_grad();
                           if (padded) {
                               Tensor dxp({xin.n(), xin.c(), xin.h(), xin.w()});
                               conv_core_bwd_input(node.grad, k->value, p.rate, dxp);
                               add_interior(dxp, p, x->grad);
                           } else {
                               conv_core_bwd_input(node.grad, k->value, p.rate, x->grad);
                           }
                       }
                       if (k->requires_grad) {
                           k->ensure_grad();
                           conv_core_bwd_kernel(node.grad, xin, p.rate, k->grad);
                       }
                       if (node.inputs.size() > 2 && node.inputs[2]->requires_grad) {
                           const Var& b = node.inputs[2];
                           b->ensure_grad();
                           const int64_t co_n = node.grad.c(), plane = node.grad.h() * node.grad.w();
                           for (int64_t n = 0; n < node.grad.n(); ++n)
                               for (int64_t co = 0; co < co_n; ++co) {
                                   const real* g = node.grad.data() + (n * co_n + co) * plane;
                                   real acc = 0.0;
                                   for (int64_t i = 0; i < plane; ++i) acc += g[i];
                                   b->grad[co] += acc;
                               }
                       }
                   });
}

Var conv2d_transpose(const Var& x, const Var& kernel, int stride) {
    if (stride < 1)
        throw std::invalid_argument("conv2d_transpose: stride must be >= 1, got " + std::to_string(stride));
    require_4d(x->value, "conv2d_transpose input");
    require_4d(kernel->value, "conv2d_transpose kernel");
    const Tensor& xv = x->value;
    const Tensor& kv = kernel->value; // (Cin, Cout, kh, kw)
    if (kv.n() != xv.c())
        throw_shape_error("conv2d_transpose: kernel expects " + std::to_string(kv.n()) +
                          " input channels, input has " + std::to_string(xv.c()));

    const int64_t s = stride;
    const int64_t ci_n = xv.c(), co_n = kv.c(), h = xv.h(), w = xv.w();
    const int64_t kh = kv.h(), kw = kv.w();
    const int64_t oh = s * (h - 1) + kh, ow = s * (w - 1) + kw;
    Tensor out({xv.n(), co_n, oh, ow});

    parallel_for(xv.n() * co_n, [&](int64_t begin, int64_t end) {
        for (int64_t idx = begin; idx < end; ++idx) {
            const int64_t n = idx / co_n, co = idx % co_n;
            real* op = out.data() + idx * oh * ow;
            for (int64_t ci = 0; ci < ci_n; ++ci) {
                const real* ip = xv.data() + (n * ci_n + ci) * h * w;
                const real* kp = kv.data() + (ci * co_n + co) * kh * kw;
                for (int64_t i = 0; i < kh; ++i) {
                    for (int64_t j = 0; j < kw; ++j) {
                        const real kvv = kp[i * kw + j];
                        if (kvv == 0.0) continue;
                        for (int64_t y = 0; y < h; ++y) {
                            real* dst = op + (s * y + i) * ow + j;
                            const real* src = ip + y * w;
                            for (int64_t xx = 0; xx < w; ++xx) dst[s * xx] += kvv * src[xx];
                        }
                    }
                }
            }
        }
    });

    return make_op(std::move(out), {x, kernel}, [s](Node& node) {
        const Var& x = node.inputs[0];
        const Var& k = node.inputs[1];
        const Tensor& kv = k->value;
        const Tensor& gout = node.grad;
        const int64_t ci_n = x->value.c(), co_n = kv.c();
        const int64_t h = x->value.h(), w = x->value.w();
        const int64_t kh = kv.h(), kw = kv.w();
        const int64_t oh = gout.h(), ow = gout.w();
        if (x->requires_grad) {
            x->ensure_grad();
            // gradient of the scatter is the corresponding forward convolution
            parallel_for(x->value.n() * ci_n, [&](int64_t begin, int64_t end) {
                for (int64_t idx = begin; idx < end; ++idx) {
                    const int64_t n = idx / ci_n, ci = idx % ci_n;
                    real* gx = x->grad.data() + idx * h * w;
                    for (int64_t co = 0; co < co_n; ++co) {
                        const real* gop = gout.data() + (n * co_n + co) * oh * ow;
                        const real* kp = kv.data() + (ci * co_n + co) * kh * kw;
                        for (int64_t i = 0; i < kh; ++i) {
                            for (int64_t j = 0; j < kw; ++j) {
                                const real kvv = kp[i * kw + j];
                                if (kvv == 0.0) continue;
                                for (int64_t y = 0; y < h; ++y) {
                                    const real* src = gop + (s * y + i) * ow + j;
                                    real* dst = gx + y * w;
                                    for (int64_t xx = 0; xx < w; ++xx) dst[xx] += kvv * src[s * xx];
                                }
                            }
                        }
                    }
                }
            });
        }
        if (k->requires_grad) {
            k->ensure_grad();
            parallel_for(ci_n, [&](int64_t begin, int64_t end) {
                for (int64_t ci = begin; ci < end; ++ci) {
                    for (int64_t co = 0; co < co_n; ++co) {
                        real* kp = k->grad.data() + (ci * co_n + co) * kh * kw;
                        for (int64_t i = 0; i < kh; ++i) {
                            for (int64_t j = 0; j < kw; ++j) {
                                real acc = 0.0;
                                for (int64_t n = 0; n < x->value.n(); ++n) {
                                    const real* ip = x->value.data() + (n * ci_n + ci) * h * w;
                                    const real* gop = gout.data() + (n * co_n + co) * oh * ow;
                                    for (int64_t y = 0; y < h; ++y) {
                                        const real* g = gop + (s * y + i) * ow + j;
                                        const real* src = ip + y * w;
                                        for (int64_t xx = 0; xx < w; ++xx) acc += src[xx] * g[s * xx];
                                    }
                                }
                                kp[i * kw + j] += acc;
                            }
                        }
                    }
                }
            });
        }
    });
}

Var bias_add(const Var& x, const Var& bias) {
    require_4d(x->value, "bias_add input");
    if (bias->value.numel() != x->value.c())
        throw_shape_error("bias_add: bias has " + std::to_string(bias->value.numel()) +
                          " entries for " + std::to_string(x->value.c()) + " channels");
    Tensor out = x->value;
    const int64_t c = out.c(), plane = out.h() * out.w();
    for (int64_t n = 0; n < out.n(); ++n)
        for (int64_t ci = 0; ci < c; ++ci) {
            real* p = out.data() + (n * c + ci) * plane;
            const real b = bias->value[ci];
            for (int64_t i = 0; i < plane; ++i) p[i] += b;
        }
    return make_op(std::move(out), {x, bias}, [](Node& node) {
        const Var& x = node.inputs[0];
        const Var& b = node.inputs[1];
        const int64_t c = node.grad.c(), plane = node.grad.h() * node.grad.w();
        if (x->requires_grad) {
            x->ensure_grad();
            for (int64_t i = 0; i < node.grad.numel(); ++i) x->grad[i] += node.grad[i];
        }
        if (b->requires_grad) {
            b->ensure_grad();
            for (int64_t n = 0; n < node.grad.n(); ++n)
                for (int64_t ci = 0; ci < c; ++ci) {
                    const real* g = node.grad.data() + (n * c + ci) * plane;
                    real acc = 0.0;
                    for (int64_t i = 0; i < plane; ++i) acc += g[i];
                    b->grad[ci] += acc;
                }
        }
    });
}

Var maxpool2(const Var& x) {
    require_4d(x->value, "maxpool2 input");
    const Tensor& xv = x->value;
    if (xv.h() % 2 != 0 || xv.w() % 2 != 0)
        throw_shape_error("maxpool2 requires even spatial extents, got " + std::to_string(xv.h()) +
                          "x" + std::to_string(xv.w()) + "; caller must arrange admissible sizes");
    const int64_t oh = xv.h() / 2, ow = xv.w() / 2;
    Tensor out({xv.n(), xv.c(), oh, ow});
    auto argmax = std::make_shared<std::vector<int64_t>>(static_cast<size_t>(out.numel()));
    const int64_t h = xv.h(), w = xv.w();
    for (int64_t plane = 0; plane < xv.n() * xv.c(); ++plane) {
        const real* ip = xv.data() + plane * h * w;
        real* op = out.data() + plane * oh * ow;
        int64_t* am = argmax->data() + plane * oh * ow;
        for (int64_t y = 0; y < oh; ++y) {
            for (int64_t xx = 0; xx < ow; ++xx) {
                // ties go to the first index in row-major window order
                int64_t best = (2 * y) * w + 2 * xx;
                real bv = ip[best];
                const int64_t cands[3] = {(2 * y) * w + 2 * xx + 1, (2 * y + 1) * w + 2 * xx,
                                          (2 * y + 1) * w + 2 * xx + 1};
                for (int64_t cand : cands)
                    if (ip[cand] > bv) { bv = ip[cand]; best = cand; }
                op[y * ow + xx] = bv;
                am[y * ow + xx] = plane * h * w + best;
            }
        }
    }
    return make_op(std::move(out), {x}, [argmax](Node& node) {
        const Var& x = node.inputs[0];
        if (!x->requires_grad) return;
        x->ensure_grad();
        for (int64_t i = 0; i < node.grad.numel(); ++i)
            x->grad[(*argmax)[static_cast<size_t>(i)]] += node.grad[i];
    });
}

Var concat_channels(const std::vector<Var>& xs) {
    if (xs.empty()) throw std::invalid_argument("concat_channels: empty input list");
    const Tensor& first = xs[0]->value;
    require_4d(first, "concat_channels input");
    int64_t c_total = 0;
    for (const auto& v : xs) {
        require_4d(v->value, "concat_channels input");
        if (v->value.n() != first.n() || v->value.h() != first.h() || v->value.w() != first.w())
            throw_shape_error("concat_channels: input " + shape_str(v->value.shape()) +
                              " does not match " + shape_str(first.shape()) + " on batch/spatial axes");
        c_total += v->value.c();
    }
    Tensor out({first.n(), c_total, first.h(), first.w()});
    const int64_t plane = first.h() * first.w();
    for (int64_t n = 0; n < first.n(); ++n) {
        int64_t co = 0;
        for (const auto& v : xs) {
            const int64_t c = v->value.c();
            const real* src = v->value.data() + n * c * plane;
            real* dst = out.data() + (n * c_total + co) * plane;
            std::copy(src, src + c * plane, dst);
            co += c;
        }
    }
    return make_op(std::move(out), xs, [](Node& node) {
        const int64_t plane = node.grad.h() * node.grad.w();
        const int64_t c_total = node.grad.c();
        for (int64_t n = 0; n < node.grad.n(); ++n) {
            int64_t co = 0;
            for (const auto& v : node.inputs) {
                const int64_t c = v->value.c();
                if (v->requires_grad) {
                    v->ensure_grad();
                    const real* src = node.grad.data() + (n * c_total + co) * plane;
                    real* dst = v->grad.data() + n * c * plane;
                    for (int64_t i = 0; i < c * plane; ++i) dst[i] += src[i];
                }
                co += c;
            }
        }
    });
}

Var slice_channels(const Var& x, int64_t from, int64_t count) {
    require_4d(x->value, "slice_channels input");
    const Tensor& xv = x->value;
    if (from < 0 || count < 1 || from + count > xv.c())
        throw std::invalid_argument("slice_channels: range [" + std::to_string(from) + ", " +
                                    std::to_string(from + count) + ") outside " +
                                    std::to_string(xv.c()) + " channels");
    Tensor out({xv.n(), count, xv.h(), xv.w()});
    const int64_t plane = xv.h() * xv.w();
    for (int64_t n = 0; n < xv.n(); ++n)
        std::copy(xv.data() + (n * xv.c() + from) * plane,
                  xv.data() + (n * xv.c() + from + count) * plane,
                  out.data() + n * count * plane);
    return make_op(std::move(out), {x}, [from, count](Node& node) {
        const Var& x = node.inputs[0];
        if (!x->requires_grad) return;
        x->ensure_grad();
        const int64_t plane = node.grad.h() * node.grad.w();
        const int64_t c = x->value.c();
        for (int64_t n = 0; n < node.grad.n(); ++n) {
            const real* src = node.grad.data() + n * count * plane;
            real* dst = x->grad.data() + (n * c + from) * plane;
            for (int64_t i = 0; i < count * plane; ++i) dst[i] += src[i];
        }
    });
}

Var center_crop(const Var& x, int64_t target_h, int64_t target_w) {
    require_4d(x->value, "center_crop input");
    const Tensor& xv = x->value;
    if (target_h < 1 || target_w < 1 || target_h > xv.h() || target_w > xv.w())
        throw std::invalid_argument("center_crop: target " + std::to_string(target_h) + "x" +
                                    std::to_string(target_w) + " exceeds input " +
                                    std::to_string(xv.h()) + "x" + std::to_string(xv.w()));
    const int64_t top = (xv.h() - target_h) / 2;
    const int64_t left = (xv.w() - target_w) / 2;
    Tensor out({xv.n(), xv.c(), target_h, target_w});
    for (int64_t plane = 0; plane < xv.n() * xv.c(); ++plane) {
        const real* src = xv.data() + plane * xv.h() * xv.w() + top * xv.w() + left;
        real* dst = out.data() + plane * target_h * target_w;
        for (int64_t y = 0; y < target_h; ++y)
            std::copy(src + y * xv.w(), src + y * xv.w() + target_w, dst + y * target_w);
    }
    return make_op(std::move(out), {x}, [top, left](Node& node) {
        const Var& x = node.inputs[0];
        if (!x->requires_grad) return;
        x->ensure_grad();
        const int64_t th = node.grad.h(), tw = node.grad.w();
        const int64_t h = x->value.h(), w = x->value.w();
        for (int64_t plane = 0; plane < x->value.n() * x->value.c(); ++plane) {
            const real* src = node.grad.data() + plane * th * tw;
            real* dst = x->grad.data() + plane * h * w + top * w + left;
            for (int64_t y = 0; y < th; ++y)
                for (int64_t xx = 0; xx < tw; ++xx) dst[y * w + xx] += src[y * tw + xx];
        }
    });
}

Var relu(const Var& x) {
    Tensor out = x->value;
    for (int64_t i = 0; i < out.numel(); ++i)
        if (out[i] < 0.0) out[i] = 0.0;
    return make_op(std::move(out), {x}, [](Node& node) {
        const Var& x = node.inputs[0];
        if (!x->requires_grad) return;
        x->ensure_grad();
        // subgradient at 0 is 0
        for (int64_t i = 0; i < node.grad.numel(); ++i)
            if (x->value[i] > 0.0) x->grad[i] += node.grad[i];
    });
}

Var add(const Var& a, const Var& b) {
    if (!a->value.same_shape(b->value))
        throw_shape_error("add: " + shape_str(a->value.shape()) + " vs " + shape_str(b->value.shape()));
    Tensor out = a->value;
    for (int64_t i = 0; i < out.numel(); ++i) out[i] += b->value[i];
    return make_op(std::move(out), {a, b}, [](Node& node) {
        for (const auto& in : node.inputs) {
            if (!in->requires_grad) continue;
            in->ensure_grad();
            for (int64_t i = 0; i < node.grad.numel(); ++i) in->grad[i] += node.grad[i];
        }
    });
}

Var mul(const Var& a, const Var& b) {
    if (!a->value.same_shape(b->value))
        throw_shape_error("mul: " + shape_str(a->value.shape()) + " vs " + shape_str(b->value.shape()));
    Tensor out = a->value;
    for (int64_t i = 0; i < out.numel(); ++i) out[i] *= b->value[i];
    return make_op(std::move(out), {a, b}, [](Node& node) {
        const Var& a = node.inputs[0];
        const Var& b = node.inputs[1];
        if (a->requires_grad) {
            a->ensure_grad();
            for (int64_t i = 0; i < node.grad.numel(); ++i) a->grad[i] += node.grad[i] * b->value[i];
        }
        if (b->requires_grad) {
            b->ensure_grad();
            for (int64_t i = 0; i < node.grad.numel(); ++i) b->grad[i] += node.grad[i] * a->value[i];
        }
    });
}

Var mul_scalar(const Var& x, real s) {
    Tensor out = x->value;
    for (int64_t i = 0; i < out.numel(); ++i) out[i] *= s;
    return make_op(std::move(out), {x}, [s](Node& node) {
        const Var& x = node.inputs[0];
        if (!x->requires_grad) return;
        x->ensure_grad();
        for (int64_t i = 0; i < node.grad.numel(); ++i) x->grad[i] += s * node.grad[i];
    });
}

Var sum(const Var& x) {
    real acc = 0.0;
    for (int64_t i = 0; i < x->value.numel(); ++i) acc += x->value[i];
    return make_op(Tensor({1}, {acc}), {x}, [](Node& node) {
        const Var& x = node.inputs[0];
        if (!x->requires_grad) return;
        x->ensure_grad();
        const real g = node.grad[0];
        for (int64_t i = 0; i < x->grad.numel(); ++i) x->grad[i] += g;
    });
}

Var softmax2(const Var& x) {
    require_4d(x->value, "softmax2 input");
    const Tensor& xv = x->value;
    if (xv.c() != 2)
        throw_shape_error("softmax2 requires exactly 2 channels, got " + std::to_string(xv.c()));
    Tensor out({xv.n(), 2, xv.h(), xv.w()});
    const int64_t plane = xv.h() * xv.w();
    for (int64_t n = 0; n < xv.n(); ++n) {
        const real* z0 = xv.data() + (n * 2) * plane;
        const real* z1 = z0 + plane;
        real* y0 = out.data() + (n * 2) * plane;
        real* y1 = y0 + plane;
        for (int64_t i = 0; i < plane; ++i) {
            const real m = std::max(z0[i], z1[i]);
            const real e0 = std::exp(z0[i] - m), e1 = std::exp(z1[i] - m);
            const real inv = 1.0 / (e0 + e1);
            y0[i] = e0 * inv;
            y1[i] = e1 * inv;
        }
    }
    return make_op(std::move(out), {x}, [](Node& node) {
        const Var& x = node.inputs[0];
        if (!x->requires_grad) return;
        x->ensure_grad();
        const int64_t plane = node.grad.h() * node.grad.w();
        for (int64_t n = 0; n < node.grad.n(); ++n) {
            const real* y0 = node.value.data() + (n * 2) * plane;
            const real* y1 = y0 + plane;
            const real* g0 = node.grad.data() + (n * 2) * plane;
            const real* g1 = g0 + plane;
            real* d0 = x->grad.data() + (n * 2) * plane;
            real* d1 = d0 + plane;
            for (int64_t i = 0; i < plane; ++i) {
                const real dot = g0[i] * y0[i] + g1[i] * y1[i];
                d0[i] += y0[i] * (g0[i] - dot);
                d1[i] += y1[i] * (g1[i] - dot);
            }
        }
    });
}

void backward(const Var& loss) {
    if (loss->value.numel() != 1)
        throw std::invalid_argument("backward: loss must be scalar, got shape " +
                                    shape_str(loss->value.shape()));
    // post-order collection; reversed it yields consumers before producers
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, size_t>> stack;
    if (loss->requires_grad) stack.emplace_back(loss.get(), 0);
    visited.insert(loss.get());
    while (!stack.empty()) {
        auto& [node, idx] = stack.back();
        if (idx < node->inputs.size()) {
            Node* next = node->inputs[idx++].get();
            if (next->requires_grad && visited.insert(next).second)
                stack.emplace_back(next, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
    loss->ensure_grad();
    loss->grad[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* node = *it;
        node->ensure_grad();
        if (node->backward_fn) node->backward_fn(*node);
    }
}

} // namespace iifcn
