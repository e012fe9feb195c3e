#pragma once

#include <cstdint>
#include <vector>

#include "fse/tensor_store.hpp"

namespace fse {

struct AdamConfig {
    double lr = 1e-3;
    double decay_rate = 0.7;
    std::int64_t decay_steps = 200000;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    std::int64_t step = 0;
    std::vector<Mat> m;  // first moments, one per parameter
    std::vector<Mat> v;  // second moments

    static AdamState init(const std::vector<Mat>& params);
};

/// Effective learning rate after step-decay: lr * decay_rate^floor(step / decay_steps).
double effective_lr(const AdamConfig& cfg, std::int64_t step);

/// One Adam update in place. Increments state.step.
void adam_step(AdamState& state, std::vector<Mat>& params, const std::vector<Mat>& grads,
               const AdamConfig& cfg);

}  // namespace fse
