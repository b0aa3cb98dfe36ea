#include "gvs/optim.hpp"

#include <cmath>
#include <numbers>

#include "gvs/error.hpp"

namespace gvs {

AdamWState AdamWState::zeros(std::size_t n) {
    const auto k = static_cast<Eigen::Index>(n);
    return {Vector::Zero(k), Vector::Zero(k), 0};
}

void adamw_step(Vector& params, const Vector& grads, AdamWState& state, double lr, double weight_decay,
                const AdamWHyper& hyper) {
    if (grads.size() != params.size() || state.m.size() != params.size() || state.v.size() != params.size()) {
        throw DimensionError("adamw_step: parameter, gradient and state sizes differ");
    }
    state.step += 1;
    const double t = static_cast<double>(state.step);
    state.m = hyper.beta1 * state.m + (1.0 - hyper.beta1) * grads;
    state.v = hyper.beta2 * state.v + (1.0 - hyper.beta2) * grads.cwiseAbs2();
    const double c1 = 1.0 - std::pow(hyper.beta1, t);
    const double c2 = 1.0 - std::pow(hyper.beta2, t);
    params *= 1.0 - lr * weight_decay;
    params.array() -= lr * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + hyper.eps);
}

double lr_at_step(std::size_t step, double base_lr, std::size_t warmup, std::size_t total) {
    if (step < warmup) return base_lr * static_cast<double>(step) / static_cast<double>(warmup);
    if (step >= total) return total <= warmup ? base_lr : 0.0;
    const double progress = static_cast<double>(step - warmup) / static_cast<double>(total - warmup);
    return base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

}  // namespace gvs
