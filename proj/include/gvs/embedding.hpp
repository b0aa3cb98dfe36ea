#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "gvs/types.hpp"

namespace gvs {

/// N x D block of embeddings with one identifier per row.
///
/// Rows are the unit of everything downstream: a training target, a
/// condition, a stored document or a generated sample. Identifiers default
/// to "0".."N-1" and must be unique.
class EmbeddingMatrix {
public:
    EmbeddingMatrix() = default;
    explicit EmbeddingMatrix(Matrix data);
    EmbeddingMatrix(Matrix data, std::vector<std::string> ids);

    std::size_t rows() const { return static_cast<std::size_t>(data_.rows()); }
    std::size_t dim() const { return static_cast<std::size_t>(data_.cols()); }
    bool empty() const { return data_.rows() == 0; }

    const Matrix& data() const { return data_; }
    const std::vector<std::string>& ids() const { return ids_; }
    const std::string& id(std::size_t row) const { return ids_[row]; }
    Eigen::Ref<const RowVector> row(std::size_t i) const { return data_.row(static_cast<Eigen::Index>(i)); }

    /// Copy of the selected rows, keeping their identifiers.
    EmbeddingMatrix select(const std::vector<std::size_t>& rows) const;

    static std::vector<std::string> default_ids(std::size_t n);

private:
    void validate() const;

    Matrix data_;
    std::vector<std::string> ids_;
};

/// Throws FormatError naming the first non-finite entry.
void require_finite(const Matrix& m, const std::string& what);

}  // namespace gvs
