#pragma once

#include "gvs/embedding.hpp"
#include "gvs/types.hpp"

namespace gvs {

/// Top-K principal axes of a centered sample.
struct PcaModel {
    Vector mean;                // D
    Matrix components;          // K x D, orthonormal rows
    Vector explained_variance;  // K, non-increasing
    double total_variance = 0;  // trace of the sample covariance

    std::size_t input_dim() const { return static_cast<std::size_t>(components.cols()); }
    std::size_t output_dim() const { return static_cast<std::size_t>(components.rows()); }
};

/// Requires k <= min(N - 1, D). Component signs are fixed so that the
/// largest-magnitude entry of each row is positive.
PcaModel pca_fit(const Matrix& x, std::size_t k);
inline PcaModel pca_fit(const EmbeddingMatrix& x, std::size_t k) { return pca_fit(x.data(), k); }

Matrix pca_project(const Matrix& x, const PcaModel& model);
EmbeddingMatrix pca_project(const EmbeddingMatrix& x, const PcaModel& model);

/// Maps projected coordinates back to the input space.
Matrix pca_reconstruct(const Matrix& projected, const PcaModel& model);

}  // namespace gvs
