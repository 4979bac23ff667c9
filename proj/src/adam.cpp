#include "iifcn/adam.hpp"

#include <cmath>

namespace iifcn {

Adam::Adam(std::vector<Var> params, AdamConfig config)
    : params_(std::move(params)), config_(config) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const auto& p : params_) {
        m_.push_back(Tensor::zeros_like(p->value));
        v_.push_back(Tensor::zeros_like(p->value));
    }
}

void Adam::step() {
    ++t_;
    const real c1 = 1.0 - std::pow(config_.beta1, static_cast<real>(t_));
    const real c2 = 1.0 - std::pow(config_.beta2, static_cast<real>(t_));
    for (size_t pi = 0; pi < params_.size(); ++pi) {
        Node& p = *params_[pi];
        if (p.grad.empty()) continue; // no gradient recorded yet
        Tensor& m = m_[pi];
        Tensor& v = v_[pi];
        for (int64_t i = 0; i < p.value.numel(); ++i) {
            const real g = p.grad[i];
            m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g;
            v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g * g;
            const real m_hat = m[i] / c1;
            const real v_hat = v[i] / c2;
            p.value[i] -= config_.lr * m_hat / (std::sqrt(v_hat) + config_.epsilon);
        }
    }
}

void Adam::zero_grad() {
    for (auto& p : params_) p->zero_grad();
}

} // namespace iifcn
