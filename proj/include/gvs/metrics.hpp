#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace gvs {

/// NDCG over the first 10 ranks with gain 2^rel - 1 and discount log2(i + 1).
/// Returns nullopt when no document has positive relevance (IDCG = 0).
/// Documents missing from `rels` have relevance 0.
std::optional<double> ndcg_at_10(const std::vector<std::string>& ranked, const std::map<std::string, int>& rels);

/// DCG of a relevance sequence truncated at `cutoff`.
double dcg(const std::vector<int>& rels_in_rank_order, std::size_t cutoff = 10);

struct ClassificationReport {
    double accuracy = 0;
    double macro_f1 = 0;
    /// Mean per-class recall ("mean accuracy across classes").
    double balanced_accuracy = 0;
    std::vector<double> per_class_f1;
    std::vector<double> precision;
    std::vector<double> recall;
    /// Classes with no true and no predicted members; their F1 counts as 0.
    std::vector<std::size_t> empty_classes;
};

/// Labels are class indices in [0, n_classes).
ClassificationReport classification_metrics(const std::vector<std::size_t>& y_true,
                                             const std::vector<std::size_t>& y_pred, std::size_t n_classes);

/// Row-major 2-D grid of class indices.
struct LabelMask {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::size_t> labels;

    std::size_t at(std::size_t r, std::size_t c) const { return labels[r * cols + c]; }
};

/// |pred_c & truth_c| / |pred_c | truth_c| per class; nullopt for classes
/// absent from both masks.
std::vector<std::optional<double>> class_iou(const LabelMask& pred, const LabelMask& truth, std::size_t n_classes);

/// Mean IoU over classes present in prediction or truth.
double miou(const LabelMask& pred, const LabelMask& truth, std::size_t n_classes);

}  // namespace gvs
