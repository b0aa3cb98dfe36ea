#include "gvs/retrieval.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <unordered_set>

#include "gvs/error.hpp"

namespace gvs {

AggregationMode parse_aggregation(const std::string& name) {
    if (name == "min-distance") return AggregationMode::kMinDistance;
    if (name == "vote") return AggregationMode::kVote;
    throw ParameterError("unknown aggregation mode '" + name + "' (expected min-distance or vote)");
}

VectorStore::VectorStore(const EmbeddingMatrix& docs, Metric metric)
    : metric_(metric), rows_(docs.data()), ids_(docs.ids()) {
    if (docs.rows() < 1) throw DimensionError("vector store needs at least one row");
    std::unordered_set<std::string> seen;
    for (const auto& id : ids_) {
        if (!seen.insert(id).second) throw FormatError("duplicate document id '" + id + "'");
    }
    if (metric_ == Metric::kCosine) {
        for (Eigen::Index i = 0; i < rows_.rows(); ++i) {
            const double n = rows_.row(i).norm();
            if (n == 0.0) throw DegenerateInputError("zero row " + std::to_string(i) + " under cosine metric");
            rows_.row(i) /= n;
        }
    }
}

Vector VectorStore::distances(const Eigen::Ref<const RowVector>& query) const {
    if (static_cast<std::size_t>(query.size()) != dim()) {
        throw DimensionError("query has dimension " + std::to_string(query.size()) + ", store has " +
                             std::to_string(dim()));
    }
    if (metric_ == Metric::kCosine) {
        const double n = query.norm();
        if (n == 0.0) throw DegenerateInputError("zero query under cosine metric");
        return (1.0 - (rows_ * (query.transpose() / n)).array()).matrix();
    }
    return (rows_.rowwise() - query).rowwise().norm();
}

namespace {

RetrievalResult top_k_by_distance(const VectorStore& store, const Vector& dist, std::size_t k) {
    const std::size_t n = store.size();
    k = std::min(k, n);
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    auto closer = [&](std::size_t a, std::size_t b) {
        const double da = dist(static_cast<Eigen::Index>(a));
        const double db = dist(static_cast<Eigen::Index>(b));
        return da < db || (da == db && a < b);
    };
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(), closer);
    RetrievalResult out;
    out.reserve(k);
    for (std::size_t i = 0; i < k; ++i) out.push_back({idx[i], store.id(idx[i]), dist(static_cast<Eigen::Index>(idx[i]))});
    return out;
}

}  // namespace

RetrievalResult knn(const VectorStore& store, const Eigen::Ref<const RowVector>& query, std::size_t k) {
    if (k < 1) throw ParameterError("k must be >= 1");
    return top_k_by_distance(store, store.distances(query), k);
}

RetrievalResult multi_sample_retrieve(const VectorStore& store, const Matrix& samples, std::size_t k,
                                      AggregationMode mode) {
    if (samples.rows() == 0) throw DimensionError("multi-sample retrieval needs at least one sample");
    if (k < 1) throw ParameterError("k must be >= 1");
    const std::size_t n = store.size();
    Vector best = Vector::Constant(static_cast<Eigen::Index>(n), std::numeric_limits<double>::infinity());
    std::vector<std::size_t> votes(n, 0);
    for (Eigen::Index s = 0; s < samples.rows(); ++s) {
        const Vector dist = store.distances(samples.row(s));
        best = best.cwiseMin(dist);
        if (mode == AggregationMode::kVote) {
            for (const auto& doc : top_k_by_distance(store, dist, k)) ++votes[doc.index];
        }
    }
    if (mode == AggregationMode::kMinDistance) return top_k_by_distance(store, best, k);

    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < n; ++i) {
        if (votes[i] > 0) idx.push_back(i);
    }
    auto better = [&](std::size_t a, std::size_t b) {
        if (votes[a] != votes[b]) return votes[a] > votes[b];
        const double da = best(static_cast<Eigen::Index>(a));
        const double db = best(static_cast<Eigen::Index>(b));
        return da < db || (da == db && a < b);
    };
    const std::size_t kk = std::min(k, idx.size());
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(kk), idx.end(), better);
    RetrievalResult out;
    for (std::size_t i = 0; i < kk; ++i) out.push_back({idx[i], store.id(idx[i]), static_cast<double>(votes[idx[i]])});
    return out;
}

MultiLabelResult multilabel_assign(const VectorStore& classes, const Matrix& samples, double threshold) {
    if (samples.rows() == 0) throw DimensionError("multi-label assignment needs at least one sample");
    MultiLabelResult out;
    std::vector<std::size_t> counts(classes.size(), 0);
    for (Eigen::Index s = 0; s < samples.rows(); ++s) ++counts[knn(classes, samples.row(s), 1).front().index];
    const double total = static_cast<double>(samples.rows());
    out.frequency.resize(classes.size());
    for (std::size_t c = 0; c < classes.size(); ++c) {
        out.frequency[c] = static_cast<double>(counts[c]) / total;
        if (out.frequency[c] >= threshold) out.labels.push_back(c);
    }
    return out;
}

}  // namespace gvs
