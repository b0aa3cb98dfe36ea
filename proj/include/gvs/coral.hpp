#pragma once

#include <string>
#include <vector>

#include "gvs/types.hpp"

namespace gvs {

/// Covariance shrinkage added to both covariances before matrix powers.
inline constexpr double kCoralShrinkage = 1e-6;

/// Second-order alignment of a source sample onto a target sample.
struct CoralModel {
    Vector source_mean;
    Vector target_mean;
    Matrix source_inv_sqrt;  // (C_s + delta I)^(-1/2)
    Matrix target_sqrt;      // (C_r + delta I)^(1/2)
    bool normalize_inputs = true;

    std::size_t dim() const { return static_cast<std::size_t>(source_mean.size()); }
};

/// Fits on source rows (e.g. generated samples) and target rows (real data).
/// With normalize_inputs both sides are first projected onto the unit sphere,
/// and coral_transform/coral_apply project their input the same way.
CoralModel coral_fit(const Matrix& source, const Matrix& target, bool normalize_inputs = true);

/// ((X - mu_s) C_s^(-1/2) C_r^(1/2)) + mu_r, without the final normalization.
Matrix coral_transform(const CoralModel& model, const Matrix& source);

/// coral_transform followed by row-wise L2 normalization.
Matrix coral_apply(const CoralModel& model, const Matrix& source);

/// Fits and applies one alignment per label: source rows with label L are
/// aligned to the target rows with label L. Every source label needs at
/// least 2 rows on both sides. Rows are returned in the source order.
Matrix coral_apply_per_class(const Matrix& source, const std::vector<std::string>& source_labels,
                             const Matrix& target, const std::vector<std::string>& target_labels,
                             bool normalize_inputs = true);

}  // namespace gvs
