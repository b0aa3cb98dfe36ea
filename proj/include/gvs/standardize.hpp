#pragma once

#include "gvs/embedding.hpp"
#include "gvs/types.hpp"

namespace gvs {

/// Per-column mean and population standard deviation.
struct StandardizeStats {
    Vector mean;
    Vector std;

    std::size_t dim() const { return static_cast<std::size_t>(mean.size()); }
    static StandardizeStats identity(std::size_t d);
};

/// Columns whose std falls below this floor are treated as constant.
inline constexpr double kStdFloor = 1e-8;

StandardizeStats standardize_fit(const Matrix& x);
inline StandardizeStats standardize_fit(const EmbeddingMatrix& x) { return standardize_fit(x.data()); }

Matrix standardize_apply(const Matrix& x, const StandardizeStats& stats);
Matrix standardize_invert(const Matrix& z, const StandardizeStats& stats);

EmbeddingMatrix standardize_apply(const EmbeddingMatrix& x, const StandardizeStats& stats);
EmbeddingMatrix standardize_invert(const EmbeddingMatrix& z, const StandardizeStats& stats);

}  // namespace gvs
