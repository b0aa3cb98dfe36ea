#include "gvs/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <unordered_set>

#include "gvs/error.hpp"

namespace gvs {

double dcg(const std::vector<int>& rels, std::size_t cutoff) {
    double sum = 0.0;
    const std::size_t n = std::min(cutoff, rels.size());
    for (std::size_t i = 0; i < n; ++i) {
        // rank i + 1 is discounted by log2(rank + 1)
        sum += (std::exp2(static_cast<double>(rels[i])) - 1.0) / std::log2(static_cast<double>(i) + 2.0);
    }
    return sum;
}

std::optional<double> ndcg_at_10(const std::vector<std::string>& ranked, const std::map<std::string, int>& rels) {
    std::vector<int> ideal;
    for (const auto& [doc, rel] : rels) {
        if (rel < 0) throw ParameterError("negative relevance for '" + doc + "'");
        ideal.push_back(rel);
    }
    std::sort(ideal.begin(), ideal.end(), std::greater<>());
    const double idcg = dcg(ideal);
    if (idcg <= 0.0) return std::nullopt;

    std::vector<int> got;
    std::unordered_set<std::string> seen;
    for (const auto& doc : ranked) {
        if (got.size() == 10) break;
        if (!seen.insert(doc).second) throw ParameterError("ranked list repeats '" + doc + "'");
        const auto it = rels.find(doc);
        got.push_back(it == rels.end() ? 0 : it->second);
    }
    return dcg(got) / idcg;
}

ClassificationReport classification_metrics(const std::vector<std::size_t>& y_true,
                                             const std::vector<std::size_t>& y_pred, std::size_t n_classes) {
    if (y_true.size() != y_pred.size()) {
        throw DimensionError("label vectors differ in length: " + std::to_string(y_true.size()) + " vs " +
                             std::to_string(y_pred.size()));
    }
    if (y_true.empty()) throw DimensionError("no labels to score");
    std::vector<std::size_t> tp(n_classes, 0), fp(n_classes, 0), fn(n_classes, 0);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        if (y_true[i] >= n_classes || y_pred[i] >= n_classes) throw ParameterError("label outside class range");
        if (y_true[i] == y_pred[i]) {
            ++correct;
            ++tp[y_true[i]];
        } else {
            ++fp[y_pred[i]];
            ++fn[y_true[i]];
        }
    }
    ClassificationReport r;
    r.accuracy = static_cast<double>(correct) / static_cast<double>(y_true.size());
    r.per_class_f1.resize(n_classes);
    r.precision.resize(n_classes);
    r.recall.resize(n_classes);
    double recall_sum = 0.0;
    std::size_t recall_classes = 0;
    for (std::size_t c = 0; c < n_classes; ++c) {
        const double t = static_cast<double>(tp[c]);
        const double pred_pos = t + static_cast<double>(fp[c]);
        const double true_pos = t + static_cast<double>(fn[c]);
        r.precision[c] = pred_pos > 0 ? t / pred_pos : 0.0;
        r.recall[c] = true_pos > 0 ? t / true_pos : 0.0;
        const double denom = r.precision[c] + r.recall[c];
        r.per_class_f1[c] = denom > 0 ? 2.0 * r.precision[c] * r.recall[c] / denom : 0.0;
        if (pred_pos == 0 && true_pos == 0) r.empty_classes.push_back(c);
        if (true_pos > 0) {
            recall_sum += r.recall[c];
            ++recall_classes;
        }
    }
    double f1_sum = 0.0;
    for (double f : r.per_class_f1) f1_sum += f;
    r.macro_f1 = n_classes > 0 ? f1_sum / static_cast<double>(n_classes) : 0.0;
    r.balanced_accuracy = recall_classes > 0 ? recall_sum / static_cast<double>(recall_classes) : 0.0;
    return r;
}

std::vector<std::optional<double>> class_iou(const LabelMask& pred, const LabelMask& truth, std::size_t n_classes) {
    if (pred.rows != truth.rows || pred.cols != truth.cols || pred.labels.size() != truth.labels.size() ||
        pred.labels.size() != pred.rows * pred.cols) {
        throw DimensionError("mask shapes differ");
    }
    std::vector<std::size_t> inter(n_classes, 0), uni(n_classes, 0);
    for (std::size_t i = 0; i < pred.labels.size(); ++i) {
        const std::size_t p = pred.labels[i];
        const std::size_t t = truth.labels[i];
        if (p >= n_classes || t >= n_classes) throw ParameterError("mask label outside class range");
        if (p == t) {
            ++inter[p];
            ++uni[p];
        } else {
            ++uni[p];
            ++uni[t];
        }
    }
    std::vector<std::optional<double>> out(n_classes);
    for (std::size_t c = 0; c < n_classes; ++c) {
        if (uni[c] > 0) out[c] = static_cast<double>(inter[c]) / static_cast<double>(uni[c]);
    }
    return out;
}

double miou(const LabelMask& pred, const LabelMask& truth, std::size_t n_classes) {
    double sum = 0.0;
    std::size_t counted = 0;
    for (const auto& iou : class_iou(pred, truth, n_classes)) {
        if (!iou) continue;
        sum += *iou;
        ++counted;
    }
    if (counted == 0) throw DimensionError("empty masks");
    return sum / static_cast<double>(counted);
}

}  // namespace gvs
