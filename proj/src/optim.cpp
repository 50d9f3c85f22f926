#include "shiftgan/optim.hpp"

#include <cmath>

#include "shiftgan/errors.hpp"

namespace shiftgan {

Adam::Adam(ParamRefs params, float beta1, float beta2, float eps)
    : params_(std::move(params)), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (Param* p : params_) {
        m_.emplace_back(p->value.shape);
        v_.emplace_back(p->value.shape);
    }
}

void Adam::step(float lr) {
    ++t_;
    const float bc1 = 1.0f - std::pow(beta1_, static_cast<float>(t_));
    const float bc2 = 1.0f - std::pow(beta2_, static_cast<float>(t_));
    for (size_t k = 0; k < params_.size(); ++k) {
        Param& p = *params_[k];
        for (long i = 0; i < p.value.numel(); ++i) {
            float g = p.grad.v[i];
            m_[k].v[i] = beta1_ * m_[k].v[i] + (1.0f - beta1_) * g;
            v_[k].v[i] = beta2_ * v_[k].v[i] + (1.0f - beta2_) * g * g;
            float mhat = m_[k].v[i] / bc1;
            float vhat = v_[k].v[i] / bc2;
            p.value.v[i] -= lr * mhat / (std::sqrt(vhat) + eps_);
        }
    }
}

void Adam::zero_grad() {
    for (Param* p : params_) p->zero_grad();
}

float scheduled_lr(float base, long step, long decay_after, long decay_until) {
    if (decay_until <= 0 || decay_until <= decay_after) return base;
    if (step <= decay_after) return base;
    if (step >= decay_until) return 0.0f;
    return base * static_cast<float>(decay_until - step) /
           static_cast<float>(decay_until - decay_after);
}

} // namespace shiftgan
