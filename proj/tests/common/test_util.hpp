#pragma once

#include <cmath>
#include <functional>

#include "gvs/flow_model.hpp"
#include "gvs/random.hpp"

namespace gvs::test {

/// Replaces every trainable parameter with a random value so that all
/// hypernet paths are active (a fresh model has zero generator outputs).
inline void randomize(FlowModel& m, std::uint64_t seed, double scale = 0.4) {
    Rng rng(seed, 99);
    for (Eigen::Index i = 0; i < m.params().size(); ++i) m.params()(i) = scale * rng.normal();
}

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed, double scale = 1.0) {
    Rng rng(seed, 7);
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = scale * rng.normal();
    return m;
}

/// Central finite differences of f with respect to every trainable parameter.
inline Vector numeric_gradient(FlowModel& m, const std::function<double(const FlowModel&)>& f, double h = 1e-4) {
    Vector g(m.params().size());
    for (Eigen::Index i = 0; i < m.params().size(); ++i) {
        const double keep = m.params()(i);
        m.params()(i) = keep + h;
        const double up = f(m);
        m.params()(i) = keep - h;
        const double down = f(m);
        m.params()(i) = keep;
        g(i) = (up - down) / (2.0 * h);
    }
    return g;
}

/// |a - n| / max(|a|, |n|, floor); the floor keeps entries that are zero up
/// to rounding from dominating.
inline double max_relative_error(const Vector& analytic, const Vector& numeric, double floor = 1e-6) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < analytic.size(); ++i) {
        const double denom = std::max({std::abs(analytic(i)), std::abs(numeric(i)), floor});
        worst = std::max(worst, std::abs(analytic(i) - numeric(i)) / denom);
    }
    return worst;
}

}  // namespace gvs::test
