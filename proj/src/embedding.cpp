#include "gvs/embedding.hpp"

#include <cmath>
#include <unordered_set>
#include <utility>

#include "gvs/error.hpp"

namespace gvs {

EmbeddingMatrix::EmbeddingMatrix(Matrix data) : data_(std::move(data)), ids_(default_ids(rows())) {
    validate();
}

EmbeddingMatrix::EmbeddingMatrix(Matrix data, std::vector<std::string> ids)
    : data_(std::move(data)), ids_(std::move(ids)) {
    if (ids_.empty() && data_.rows() > 0) ids_ = default_ids(rows());
    validate();
}

std::vector<std::string> EmbeddingMatrix::default_ids(std::size_t n) {
    std::vector<std::string> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(std::to_string(i));
    return out;
}

EmbeddingMatrix EmbeddingMatrix::select(const std::vector<std::size_t>& rows) const {
    Matrix out(static_cast<Eigen::Index>(rows.size()), data_.cols());
    std::vector<std::string> ids;
    ids.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] >= this->rows()) throw DimensionError("row index " + std::to_string(rows[i]) + " out of range");
        out.row(static_cast<Eigen::Index>(i)) = data_.row(static_cast<Eigen::Index>(rows[i]));
        ids.push_back(ids_[rows[i]]);
    }
    return EmbeddingMatrix(std::move(out), std::move(ids));
}

void EmbeddingMatrix::validate() const {
    if (data_.cols() < 1) throw DimensionError("embedding dimension must be >= 1");
    if (ids_.size() != rows())
        throw DimensionError("expected " + std::to_string(rows()) + " ids, got " + std::to_string(ids_.size()));
    std::unordered_set<std::string> seen;
    seen.reserve(ids_.size());
    for (const auto& id : ids_) {
        if (!seen.insert(id).second) throw FormatError("duplicate row id '" + id + "'");
    }
    require_finite(data_, "embedding matrix");
}

void require_finite(const Matrix& m, const std::string& what) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            if (!std::isfinite(m(r, c))) {
                throw FormatError(what + ": non-finite value at row " + std::to_string(r) + ", column " +
                                  std::to_string(c));
            }
        }
    }
}

}  // namespace gvs
