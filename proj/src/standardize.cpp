#include "gvs/standardize.hpp"

#include <cmath>

#include "gvs/error.hpp"

namespace gvs {

StandardizeStats StandardizeStats::identity(std::size_t d) {
    const auto n = static_cast<Eigen::Index>(d);
    return {Vector::Zero(n), Vector::Ones(n)};
}

StandardizeStats standardize_fit(const Matrix& x) {
    if (x.rows() == 0 || x.cols() == 0) throw DimensionError("standardize_fit on an empty matrix");
    if (x.rows() < 2) throw DimensionError("standardize_fit needs at least 2 rows");
    StandardizeStats s;
    s.mean = x.colwise().mean().transpose();
    const Matrix centered = x.rowwise() - s.mean.transpose();
    s.std = (centered.array().square().colwise().sum() / static_cast<double>(x.rows())).sqrt().transpose();
    for (Eigen::Index j = 0; j < s.std.size(); ++j) {
        if (s.std(j) < kStdFloor) s.std(j) = 1.0;
    }
    return s;
}

namespace {

void check_dim(const Matrix& x, const StandardizeStats& stats) {
    if (static_cast<std::size_t>(x.cols()) != stats.dim()) {
        throw DimensionError("matrix has " + std::to_string(x.cols()) + " columns, stats have " +
                             std::to_string(stats.dim()));
    }
}

}  // namespace

Matrix standardize_apply(const Matrix& x, const StandardizeStats& stats) {
    check_dim(x, stats);
    return (x.rowwise() - stats.mean.transpose()).array().rowwise() / stats.std.transpose().array();
}

Matrix standardize_invert(const Matrix& z, const StandardizeStats& stats) {
    check_dim(z, stats);
    Matrix out = z.array().rowwise() * stats.std.transpose().array();
    out.rowwise() += stats.mean.transpose();
    return out;
}

EmbeddingMatrix standardize_apply(const EmbeddingMatrix& x, const StandardizeStats& stats) {
    return EmbeddingMatrix(standardize_apply(x.data(), stats), x.ids());
}

EmbeddingMatrix standardize_invert(const EmbeddingMatrix& z, const StandardizeStats& stats) {
    return EmbeddingMatrix(standardize_invert(z.data(), stats), z.ids());
}

}  // namespace gvs
