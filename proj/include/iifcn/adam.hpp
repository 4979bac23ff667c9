#pragma once

#include <cstdint>
#include <vector>

#include "iifcn/autodiff.hpp"

namespace iifcn {

struct AdamConfig {
    real lr = 1e-4;
    real beta1 = 0.9;
    real beta2 = 0.9999;
    real epsilon = 1e-8;
};

// Bias-corrected Adam over a fixed parameter set. Moment tensors match the
// parameter shapes; second moments stay nonnegative by construction.
class Adam {
public:
    Adam(std::vector<Var> params, AdamConfig config);

    // One update from the currently accumulated gradients.
    void step();
    void zero_grad();

    int64_t step_count() const { return t_; }
    const AdamConfig& config() const { return config_; }
    const Tensor& first_moment(size_t i) const { return m_[i]; }
    const Tensor& second_moment(size_t i) const { return v_[i]; }

private:
    std::vector<Var> params_;
    std::vector<Tensor> m_, v_;
    AdamConfig config_;
    int64_t t_ = 0;
};

} // namespace iifcn
