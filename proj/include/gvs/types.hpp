#pragma once

#include <Eigen/Dense>

namespace gvs {

/// Row-major so that one row is one embedding and rows are contiguous.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

}  // namespace gvs
