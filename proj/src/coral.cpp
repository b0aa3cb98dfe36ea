#include "gvs/coral.hpp"

#include <map>

#include "gvs/distance.hpp"
#include "gvs/error.hpp"
#include "gvs/linalg.hpp"

namespace gvs {

CoralModel coral_fit(const Matrix& source, const Matrix& target, bool normalize_inputs) {
    if (source.cols() != target.cols()) {
        throw DimensionError("coral: source has " + std::to_string(source.cols()) + " columns, target has " +
                             std::to_string(target.cols()));
    }
    if (source.rows() < 2 || target.rows() < 2) throw DimensionError("coral needs at least 2 rows on each side");
    const Matrix xs = normalize_inputs ? l2_normalize_rows(source) : source;
    const Matrix xr = normalize_inputs ? l2_normalize_rows(target) : target;
    const Matrix shrink = kCoralShrinkage * Matrix::Identity(xs.cols(), xs.cols());
    CoralModel m;
    m.normalize_inputs = normalize_inputs;
    m.source_mean = xs.colwise().mean().transpose();
    m.target_mean = xr.colwise().mean().transpose();
    m.source_inv_sqrt = sym_matrix_power(covariance(xs) + shrink, -0.5);
    m.target_sqrt = sym_matrix_power(covariance(xr) + shrink, 0.5);
    return m;
}

Matrix coral_transform(const CoralModel& model, const Matrix& source) {
    if (static_cast<std::size_t>(source.cols()) != model.dim()) throw DimensionError("coral: dimension mismatch");
    const Matrix xs = model.normalize_inputs ? l2_normalize_rows(source) : source;
    Matrix out = (xs.rowwise() - model.source_mean.transpose()) * (model.source_inv_sqrt * model.target_sqrt);
    out.rowwise() += model.target_mean.transpose();
    return out;
}

Matrix coral_apply(const CoralModel& model, const Matrix& source) {
    return l2_normalize_rows(coral_transform(model, source));
}

namespace {

std::map<std::string, std::vector<Eigen::Index>> rows_by_label(const std::vector<std::string>& labels) {
    std::map<std::string, std::vector<Eigen::Index>> out;
    for (std::size_t i = 0; i < labels.size(); ++i) out[labels[i]].push_back(static_cast<Eigen::Index>(i));
    return out;
}

}  // namespace

Matrix coral_apply_per_class(const Matrix& source, const std::vector<std::string>& source_labels,
                             const Matrix& target, const std::vector<std::string>& target_labels,
                             bool normalize_inputs) {
    if (source_labels.size() != static_cast<std::size_t>(source.rows()) ||
        target_labels.size() != static_cast<std::size_t>(target.rows())) {
        throw DimensionError("coral: one label per row expected");
    }
    const auto target_rows = rows_by_label(target_labels);
    Matrix out(source.rows(), source.cols());
    for (const auto& [label, rows] : rows_by_label(source_labels)) {
        const auto it = target_rows.find(label);
        if (it == target_rows.end()) throw DimensionError("coral: label '" + label + "' has no target rows");
        const CoralModel model = coral_fit(source(rows, Eigen::all), target(it->second, Eigen::all), normalize_inputs);
        const Matrix aligned = coral_apply(model, source(rows, Eigen::all));
        for (std::size_t i = 0; i < rows.size(); ++i) out.row(rows[i]) = aligned.row(static_cast<Eigen::Index>(i));
    }
    return out;
}

}  // namespace gvs
