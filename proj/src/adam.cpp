#include "fse/adam.hpp"

#include <cmath>
#include <string>

#include "fse/errors.hpp"

namespace fse {

AdamState AdamState::init(const std::vector<Mat>& params) {
    AdamState s;
    s.m.reserve(params.size());
    s.v.reserve(params.size());
    for (const Mat& p : params) {
        s.m.push_back(Mat::Zero(p.rows(), p.cols()));
        s.v.push_back(Mat::Zero(p.rows(), p.cols()));
    }
    return s;
}

double effective_lr(const AdamConfig& cfg, std::int64_t step) {
    return cfg.lr * std::pow(cfg.decay_rate, static_cast<double>(step / cfg.decay_steps));
}

void adam_step(AdamState& state, std::vector<Mat>& params, const std::vector<Mat>& grads,
               const AdamConfig& cfg) {
    if (params.size() != grads.size() || params.size() != state.m.size()) {
        throw DataError("adam_step: parameter/gradient/state count mismatch");
    }
    const double lr = effective_lr(cfg, state.step);
    const std::int64_t t = state.step + 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));

    for (std::size_t i = 0; i < params.size(); ++i) {
        if (grads[i].rows() != params[i].rows() || grads[i].cols() != params[i].cols()) {
            throw DataError("adam_step: gradient shape mismatch at parameter " +
                            std::to_string(i));
        }
        if (!grads[i].allFinite()) {
            throw NumericalError("adam_step: non-finite gradient at parameter " +
                                 std::to_string(i));
        }
        state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * grads[i];
        state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * grads[i].cwiseProduct(grads[i]);
        const Mat m_hat = state.m[i] / bc1;
        const Mat v_hat = state.v[i] / bc2;
        params[i] -= lr * m_hat.cwiseQuotient((v_hat.cwiseSqrt().array() + cfg.eps).matrix());
    }
    state.step = t;
}

}  // namespace fse
