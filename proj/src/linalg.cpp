#include "gvs/linalg.hpp"

#include <algorithm>
#include <cmath>

#include "gvs/error.hpp"

namespace gvs {

Matrix covariance(const Matrix& x) {
    if (x.rows() < 2) throw DimensionError("covariance needs at least 2 rows");
    const Matrix centered = x.rowwise() - x.colwise().mean();
    Matrix c = centered.transpose() * centered / static_cast<double>(x.rows() - 1);
    return 0.5 * (c + c.transpose());
}

Matrix sym_matrix_power(const Matrix& c, double p) {
    if (c.rows() != c.cols()) throw DimensionError("sym_matrix_power needs a square matrix");
    const double scale = std::max(1.0, c.cwiseAbs().maxCoeff());
    if ((c - c.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale) {
        throw ParameterError("sym_matrix_power input is not symmetric");
    }
    const Matrix sym = 0.5 * (c + c.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
    if (solver.info() != Eigen::Success) throw DegenerateInputError("eigendecomposition did not converge");
    const Eigen::VectorXd powered =
        solver.eigenvalues().unaryExpr([p](double v) { return std::pow(std::max(v, kEigenFloor), p); });
    const Eigen::MatrixXd& q = solver.eigenvectors();
    return q * powered.asDiagonal() * q.transpose();
}

}  // namespace gvs
