#include "iifcn/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace iifcn {

namespace {

constexpr real kProbFloor = 1e-12;

void check_binary_mask(const Tensor& mask, const char* who) {
    for (int64_t i = 0; i < mask.numel(); ++i)
        if (mask[i] != 0.0 && mask[i] != 255.0)
            throw std::invalid_argument(std::string(who) +
                                        ": mask values must be exactly 0 or 255");
}

// Accepts (2, h, w) or (1, 2, h, w); both have the same flat layout.
void check_prob_shape(const Tensor& prob, const Tensor& target, const char* who) {
    bool ok = (prob.ndim() == 3 && prob.shape()[0] == 2) ||
              (prob.ndim() == 4 && prob.n() == 1 && prob.c() == 2);
    if (!ok)
        throw std::invalid_argument(std::string(who) +
                                    ": probabilities must be (2, h, w) or (1, 2, h, w)");
    int64_t h = prob.shape()[prob.ndim() - 2], w = prob.shape()[prob.ndim() - 1];
    if (target.ndim() != 2 || target.shape()[0] != h || target.shape()[1] != w)
        throw std::invalid_argument(std::string(who) +
                                    ": target must be (h, w) matching the probabilities");
}

} // namespace

WeightFilter reweight_filter(const Tensor& mask, real eps) {
    if (mask.ndim() != 2) throw std::invalid_argument("reweight_filter: mask must be (h, w)");
    if (!(eps > 0 && eps < 0.5))
        throw std::invalid_argument("reweight_filter: eps must lie in (0, 0.5)");
    check_binary_mask(mask, "reweight_filter");
    int64_t h = mask.shape()[0], w = mask.shape()[1];
    real n = 0;
    for (int64_t i = 0; i < mask.numel(); ++i) n += mask[i] / 255.0;
    real p = n / real(h * w);
    if (p < eps) p = eps;
    if (p > 1 - eps) p = 1 - eps;
    real denom = 2 * p * (1 - p);
    WeightFilter f;
    f.n = n;
    f.p = p;
    f.weights = Tensor({h, w});
    for (int64_t i = 0; i < mask.numel(); ++i)
        f.weights[i] = (mask[i] == 0.0 ? p : 1 - p) / denom;
    return f;
}

Var weighted_entropy_loss(const Var& prob, const Tensor& target, const WeightFilter& filter) {
    if (!prob) throw std::invalid_argument("weighted_entropy_loss: null probability input");
    check_prob_shape(prob->value, target, "weighted_entropy_loss");
    check_binary_mask(target, "weighted_entropy_loss");
    int64_t h = target.shape()[0], w = target.shape()[1];
    if (filter.weights.ndim() != 2 || filter.weights.shape()[0] != h ||
        filter.weights.shape()[1] != w)
        throw std::invalid_argument("weighted_entropy_loss: filter does not match the target");

    const int64_t hw = h * w;
    Tensor weights = filter.weights;
    Tensor tgt = target;
    real acc = 0;
    for (int64_t i = 0; i < hw; ++i) {
        int64_t cls = tgt[i] == 0.0 ? 0 : 1;
        real p = prob->value[cls * hw + i];
        acc += weights[i] * -std::log(std::max(p, kProbFloor));
    }
    Tensor out({1});
    out[0] = acc / real(hw);

    return make_op(std::move(out), {prob}, [weights, tgt, hw](Node& node) {
        const Var& p = node.inputs[0];
        if (!p->requires_grad) return;
        p->ensure_grad();
        real g = node.grad[0] / real(hw);
        for (int64_t i = 0; i < hw; ++i) {
            int64_t cls = tgt[i] == 0.0 ? 0 : 1;
            real pv = p->value[cls * hw + i];
            if (pv >= kProbFloor) p->grad[cls * hw + i] -= g * weights[i] / pv;
        }
    });
}

Tensor harden(const Tensor& a) {
    Tensor out(a.shape());
    for (int64_t i = 0; i < a.numel(); ++i) out[i] = a[i] >= 0.5 ? 1.0 : 0.0;
    return out;
}

namespace {

void check_jaccard_inputs(const Tensor& a, const Tensor& b, real k) {
    if (k <= 1.0) throw std::invalid_argument("jaccard_loss: k must be greater than 1");
    if (a.numel() != b.numel())
        throw std::invalid_argument("jaccard_loss: operand sizes differ");
    for (int64_t i = 0; i < b.numel(); ++i)
        if (b[i] != 0.0 && b[i] != 1.0)
            throw std::invalid_argument("jaccard_loss: ground truth must be binary {0, 1}");
}

real jaccard_value(const Tensor& a, const Tensor& b, real k) {
    real sum_a = 0, sum_b = 0, d = 0;
    for (int64_t i = 0; i < a.numel(); ++i) {
        sum_a += a[i];
        sum_b += b[i];
        d += std::abs(a[i] - b[i]);
    }
    if (sum_a == 0.0 || sum_b == 0.0) return 0.0;
    real s = sum_a + sum_b;
    return std::log10(s / (k * s - d) + 1 - 1 / k);
}

} // namespace

real jaccard_loss(const Tensor& a, const Tensor& b, real k, JaccardMode mode) {
    check_jaccard_inputs(a, b, k);
    return jaccard_value(mode == JaccardMode::literal ? harden(a) : a, b, k);
}

Var jaccard_loss(const Var& a, const Tensor& b, real k, JaccardMode mode) {
    if (!a) throw std::invalid_argument("jaccard_loss: null prediction input");
    check_jaccard_inputs(a->value, b, k);
    Tensor gt = b;
    Tensor out({1});
    out[0] = jaccard_value(mode == JaccardMode::literal ? harden(a->value) : a->value, gt, k);

    if (mode == JaccardMode::literal)
        return make_op(std::move(out), {a}, [](Node&) {}); // thresholding blocks the gradient

    return make_op(std::move(out), {a}, [gt, k](Node& node) {
        const Var& av = node.inputs[0];
        if (!av->requires_grad) return;
        av->ensure_grad();
        const Tensor& aval = av->value;
        real sum_a = 0, sum_b = 0, d = 0;
        for (int64_t i = 0; i < aval.numel(); ++i) {
            sum_a += aval[i];
            sum_b += gt[i];
            d += std::abs(aval[i] - gt[i]);
        }
        if (sum_a == 0.0 || sum_b == 0.0) return; // constant branch
        real s = sum_a + sum_b;
        real q = k * s - d;
        real r = s / q + 1 - 1 / k;
        real g = node.grad[0] / (r * q * q * std::log(10.0));
        for (int64_t i = 0; i < aval.numel(); ++i) {
            real diff = aval[i] - gt[i];
            real sign = diff > 0 ? 1.0 : (diff < 0 ? -1.0 : 0.0);
            av->grad[i] += g * (s * sign - d);
        }
    });
}

CombinedLoss combined_loss(const Var& prob, const Tensor& target, real k, JaccardMode mode) {
    if (!prob) throw std::invalid_argument("combined_loss: null probability input");
    check_prob_shape(prob->value, target, "combined_loss");
    WeightFilter filter = reweight_filter(target);
    int64_t h = target.shape()[0], w = target.shape()[1];
    const int64_t hw = h * w;

    // Object-channel view of the softmax output, as an (h, w) map.
    Tensor aval({h, w});
    for (int64_t i = 0; i < hw; ++i) aval[i] = prob->value[hw + i];
    Var object = make_op(std::move(aval), {prob}, [hw](Node& node) {
        const Var& p = node.inputs[0];
        if (!p->requires_grad) return;
        p->ensure_grad();
        for (int64_t i = 0; i < hw; ++i) p->grad[hw + i] += node.grad[i];
    });

    Tensor gt({h, w});
    for (int64_t i = 0; i < hw; ++i) gt[i] = target[i] == 0.0 ? 0.0 : 1.0;

    CombinedLoss result;
    result.entropy = weighted_entropy_loss(prob, target, filter);
    result.jaccard = jaccard_loss(object, gt, k, mode);
    result.total = add(result.entropy, result.jaccard);
    return result;
}

} // namespace iifcn
