#pragma once

#include <span>
#include <vector>

#include "atrfas/tensor.hpp"

namespace atrfas {

struct AdamState {
    std::vector<std::vector<float>> m, v;
    int64_t t = 0;
};

/// One bias-corrected Adam update over a parameter list. Parameters with no
/// gradient buffer are treated as zero-gradient.
void adam_step(std::span<nd::Tensor> params, AdamState& state, float lr, float beta1 = 0.9f,
               float beta2 = 0.999f, float eps = 1e-8f);

class Adam {
public:
    Adam(std::vector<nd::Tensor> params, float lr, float beta1 = 0.9f, float beta2 = 0.999f,
         float eps = 1e-8f)
        : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    void step() { adam_step(params_, state_, lr_, beta1_, beta2_, eps_); }
    void zero_grad() {
        for (auto& p : params_) p.zero_grad();
    }
    void set_lr(float lr) { lr_ = lr; }
    float lr() const { return lr_; }

private:
    std::vector<nd::Tensor> params_;
    AdamState state_;
    float lr_, beta1_, beta2_, eps_;
};

} // namespace atrfas
