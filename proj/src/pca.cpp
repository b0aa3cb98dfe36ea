#include "gvs/pca.hpp"

#include <algorithm>

#include "gvs/error.hpp"
#include "gvs/linalg.hpp"

namespace gvs {

PcaModel pca_fit(const Matrix& x, std::size_t k) {
    const auto n = static_cast<std::size_t>(x.rows());
    const auto d = static_cast<std::size_t>(x.cols());
    if (n < 2) throw ParameterError("pca_fit needs at least 2 rows");
    if (k < 1 || k > std::min(n - 1, d)) {
        throw ParameterError("pca k=" + std::to_string(k) + " must be in [1, min(N-1, D)] = [1, " +
                             std::to_string(std::min(n - 1, d)) + "]");
    }
    PcaModel model;
    model.mean = x.colwise().mean().transpose();
    const Matrix cov = covariance(x);
    model.total_variance = cov.trace();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) throw DegenerateInputError("pca eigendecomposition did not converge");
    // Eigen returns ascending eigenvalues.
    const auto dd = static_cast<Eigen::Index>(d);
    const auto kk = static_cast<Eigen::Index>(k);
    model.components.resize(kk, dd);
    model.explained_variance.resize(kk);
    for (Eigen::Index i = 0; i < kk; ++i) {
        const Eigen::Index src = dd - 1 - i;
        Eigen::VectorXd axis = solver.eigenvectors().col(src);
        Eigen::Index arg = 0;
        axis.cwiseAbs().maxCoeff(&arg);
        if (axis(arg) < 0) axis = -axis;
        model.components.row(i) = axis.transpose();
        model.explained_variance(i) = std::max(0.0, solver.eigenvalues()(src));
    }
    return model;
}

Matrix pca_project(const Matrix& x, const PcaModel& model) {
    if (static_cast<std::size_t>(x.cols()) != model.input_dim()) {
        throw DimensionError("pca_project: input has " + std::to_string(x.cols()) + " columns, model expects " +
                             std::to_string(model.input_dim()));
    }
    return (x.rowwise() - model.mean.transpose()) * model.components.transpose();
}

EmbeddingMatrix pca_project(const EmbeddingMatrix& x, const PcaModel& model) {
    return EmbeddingMatrix(pca_project(x.data(), model), x.ids());
}

Matrix pca_reconstruct(const Matrix& projected, const PcaModel& model) {
    if (static_cast<std::size_t>(projected.cols()) != model.output_dim()) {
        throw DimensionError("pca_reconstruct: wrong projected dimension");
    }
    Matrix out = projected * model.components;
    out.rowwise() += model.mean.transpose();
    return out;
}

}  // namespace gvs
