#include "gvs/distance.hpp"

#include "gvs/error.hpp"

namespace gvs {

Metric parse_metric(std::string_view name) {
    if (name == "cosine") return Metric::kCosine;
    if (name == "euclidean") return Metric::kEuclidean;
    throw ParameterError("unknown metric '" + std::string(name) + "' (expected cosine or euclidean)");
}

std::string_view metric_name(Metric m) { return m == Metric::kCosine ? "cosine" : "euclidean"; }

double distance(const Eigen::Ref<const RowVector>& a, const Eigen::Ref<const RowVector>& b, Metric metric) {
    if (a.size() != b.size()) {
        throw DimensionError("distance between vectors of size " + std::to_string(a.size()) + " and " +
                             std::to_string(b.size()));
    }
    if (metric == Metric::kEuclidean) return (a - b).norm();
    const double na = a.norm();
    const double nb = b.norm();
    if (na == 0.0 || nb == 0.0) throw DegenerateInputError("cosine distance with a zero vector");
    return 1.0 - a.dot(b) / (na * nb);
}

RowVector l2_normalize(const Eigen::Ref<const RowVector>& v) {
    const double n = v.norm();
    if (n == 0.0) throw DegenerateInputError("cannot normalize a zero vector");
    return v / n;
}

Matrix l2_normalize_rows(const Matrix& m) {
    Matrix out(m.rows(), m.cols());
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        const double n = m.row(i).norm();
        if (n == 0.0) throw DegenerateInputError("cannot normalize zero row " + std::to_string(i));
        out.row(i) = m.row(i) / n;
    }
    return out;
}

}  // namespace gvs
