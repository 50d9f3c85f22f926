#pragma once

#include <vector>

#include "shiftgan/layers.hpp"

namespace shiftgan {

/// Adam with the CycleGAN defaults: betas (0.5, 0.999), eps 1e-8.
class Adam {
public:
    explicit Adam(ParamRefs params, float beta1 = 0.5f, float beta2 = 0.999f,
                  float eps = 1e-8f);

    void step(float lr);
    void zero_grad();
    const ParamRefs& params() const { return params_; }

private:
    ParamRefs params_;
    std::vector<Tensor> m_, v_;
    float beta1_, beta2_, eps_;
    long t_ = 0;
};

/// Piecewise-linear learning-rate schedule: constant at `base` through step
/// `decay_after`, then linear to exactly 0 at step `decay_until`.
/// decay_until == 0 means constant throughout.
float scheduled_lr(float base, long step, long decay_after, long decay_until);

} // namespace shiftgan
