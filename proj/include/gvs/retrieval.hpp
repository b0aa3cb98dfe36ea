#pragma once

#include <string>
#include <vector>

#include "gvs/distance.hpp"
#include "gvs/embedding.hpp"

namespace gvs {

struct ScoredDoc {
    std::size_t index = 0;  // row in the store
    std::string id;
    double score = 0;
};

/// Ranked documents. Distance mode: ascending score. Vote mode: descending
/// vote count. Ties always go to the lower store row.
using RetrievalResult = std::vector<ScoredDoc>;

enum class AggregationMode { kMinDistance, kVote };

AggregationMode parse_aggregation(const std::string& name);

/// Immutable exact-search collection of document embeddings.
///
/// Under the cosine metric rows are normalized once at build time and the
/// distance to a query is 1 - <row, q/|q|>.
class VectorStore {
public:
    VectorStore(const EmbeddingMatrix& docs, Metric metric);

    Metric metric() const { return metric_; }
    bool normalized() const { return metric_ == Metric::kCosine; }
    std::size_t size() const { return static_cast<std::size_t>(rows_.rows()); }
    std::size_t dim() const { return static_cast<std::size_t>(rows_.cols()); }
    const Matrix& rows() const { return rows_; }
    const std::string& id(std::size_t i) const { return ids_[i]; }

    /// Distances from one query to every stored row.
    Vector distances(const Eigen::Ref<const RowVector>& query) const;

private:
    Metric metric_;
    Matrix rows_;
    std::vector<std::string> ids_;
};

/// Exact k nearest rows; k > size() returns every row.
RetrievalResult knn(const VectorStore& store, const Eigen::Ref<const RowVector>& query, std::size_t k);

/// Fuses the neighbours of several query samples into one ranking.
///
/// kMinDistance scores each document by its smallest distance to any sample.
/// kVote gives each sample k votes (its k nearest documents) and ranks by
/// vote count, then by smallest distance.
RetrievalResult multi_sample_retrieve(const VectorStore& store, const Matrix& samples, std::size_t k,
                                      AggregationMode mode = AggregationMode::kMinDistance);

struct MultiLabelResult {
    std::vector<std::size_t> labels;  // store rows whose frequency reaches the threshold
    std::vector<double> frequency;    // one entry per store row, sums to 1
};

/// Assigns each sample to its nearest class row and returns the class
/// frequency distribution plus every class at or above `threshold`.
MultiLabelResult multilabel_assign(const VectorStore& classes, const Matrix& samples, double threshold);

}  // namespace gvs
