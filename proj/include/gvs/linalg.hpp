#pragma once

#include "gvs/types.hpp"

namespace gvs {

/// Eigenvalues are clamped to this floor before fractional powers.
inline constexpr double kEigenFloor = 1e-8;

/// Sample covariance with divisor N-1 (rows are observations).
Matrix covariance(const Matrix& x);

/// Q diag(max(lambda, floor)^p) Q^T for a symmetric matrix C = Q diag(lambda) Q^T.
/// Throws ParameterError when C is not symmetric within 1e-8 (scaled by its largest entry).
Matrix sym_matrix_power(const Matrix& c, double p);

}  // namespace gvs
