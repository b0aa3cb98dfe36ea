#pragma once

#include <cstddef>

#include "gvs/types.hpp"

namespace gvs {

struct AdamWState {
    Vector m;
    Vector v;
    std::size_t step = 0;  // number of updates applied so far

    static AdamWState zeros(std::size_t n);
};

struct AdamWHyper {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// One decoupled-weight-decay Adam update with learning rate `lr`.
///   p <- p (1 - lr wd) - lr mhat / (sqrt(vhat) + eps)
void adamw_step(Vector& params, const Vector& grads, AdamWState& state, double lr, double weight_decay,
                const AdamWHyper& hyper = {});

/// Linear warmup from 0 to base_lr over `warmup` steps, then cosine decay to
/// 0 at `total` steps. Steps beyond `total` return 0.
double lr_at_step(std::size_t step, double base_lr, std::size_t warmup, std::size_t total);

}  // namespace gvs
